// Python bindings for the orbit-langevin library. The module mirrors the CLI
// surface: instance generation and IO, loss/gradient, orbit geometry, the
// Langevin sampler, the scalar comparison process, the torus example, and the
// diagnostics report.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbit/diagnostics.hpp"
#include "orbit/io.hpp"
#include "orbit/manifold.hpp"
#include "orbit/operators.hpp"
#include "orbit/processes.hpp"
#include "orbit/rng.hpp"
#include "orbit/sampler.hpp"
#include "orbit/torus.hpp"
#include "orbit/types.hpp"

namespace py = pybind11;
using namespace orbit;

namespace {

OperatorVariant variant_from_string(const std::string& name) {
  if (name == "factorization") return OperatorVariant::Factorization;
  if (name == "sensing") return OperatorVariant::Sensing;
  if (name == "completion") return OperatorVariant::Completion;
  throw std::invalid_argument("unknown operator variant: " + name);
}

std::string variant_to_string(OperatorVariant v) {
  switch (v) {
    case OperatorVariant::Factorization: return "factorization";
    case OperatorVariant::Sensing: return "sensing";
    case OperatorVariant::Completion: return "completion";
  }
  throw std::logic_error("unreachable variant");
}

Instance make_instance(int d, int k, const std::vector<double>& spectrum,
                       const std::string& variant, double beta, std::uint64_t seed, int L,
                       double p) {
  GenerateOptions opts;
  opts.L = L;
  opts.p = p;
  return generate_instance(Dims(d, k), SpectrumSpec(spectrum),
                           variant_from_string(variant), opts, beta, seed);
}

RunConfig make_config(double beta, double h, long steps, long burnin, long thin, int chains,
                      std::uint64_t seed) {
  RunConfig cfg;
  cfg.beta = beta;
  cfg.h = h;
  cfg.steps = steps;
  cfg.burnin = burnin;
  cfg.thin = thin;
  cfg.chains = chains;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

Eigen::MatrixXd default_start(const Instance& inst, double tol, long long max_iters) {
  RngStream rng(inst.seed, kStreamInit);
  return init_gradient_descent(inst, rng, tol, max_iters);
}

py::dict trajectory_to_dict(const Trajectory& t) {
  const std::size_t n = t.records.size();
  std::vector<long long> step(n);
  std::vector<double> time(n), eta_v(n), f_v(n), angle(n), s_norm(n), y_norm(n);
  std::vector<int> branch(n);
  std::vector<Eigen::MatrixXd> xs;
  for (std::size_t i = 0; i < n; ++i) {
    const TrajectoryRecord& r = t.records[i];
    step[i] = r.step;
    time[i] = r.time;
    eta_v[i] = r.eta;
    f_v[i] = r.f_value;
    branch[i] = r.branch;
    angle[i] = r.has_angle ? r.angle : std::numeric_limits<double>::quiet_NaN();
    s_norm[i] = r.s_norm;
    y_norm[i] = r.y_norm;
    if (r.has_x) xs.push_back(r.x);
  }
  py::dict out;
  out["chain_id"] = t.chain_id;
  out["home_branch"] = t.home_branch;
  out["diverged"] = t.diverged;
  out["diverged_at_step"] = t.diverged_at_step;
  out["note"] = t.note;
  out["step"] = step;
  out["time"] = time;
  out["eta"] = eta_v;
  out["f"] = f_v;
  out["branch"] = branch;
  out["angle"] = angle;
  out["s_norm"] = s_norm;
  out["y_norm"] = y_norm;
  if (!xs.empty()) out["x"] = xs;
  return out;
}

py::dict report_to_dict(const DiagnosticsReport& rep) {
  py::dict out;
  out["nearness_fraction"] = rep.nearness_fraction;
  out["max_eta"] = rep.max_eta;
  out["tube_radius_used"] = rep.tube_radius_used;
  out["branch_flips"] = rep.branch_flips;
  out["ks_uniform_angle"] = rep.ks_uniform_angle;
  out["f_constancy_cv"] = rep.f_constancy_cv;
  out["det_constancy_cv"] = rep.det_constancy_cv;
  out["grad_corr_violations"] = rep.grad_corr_violations;
  out["iact_eta"] = rep.iact_eta;
  out["iact_angle"] = rep.iact_angle;
  out["cir_gamma_hat"] = rep.cir_fit.gamma_hat;
  out["cir_n_tilde_hat"] = rep.cir_fit.n_tilde_hat;
  out["notes"] = rep.notes;
  return out;
}

}  // namespace

PYBIND11_MODULE(orbit_langevin, m) {
  m.doc() = "Langevin sampling workbench for orbit-valued low-rank recovery posteriors";

  py::register_exception<DegenerateProjection>(m, "DegenerateProjectionError");
  py::register_exception<TubeExceeded>(m, "TubeExceededError");
  py::register_exception<DivergedChain>(m, "DivergedChainError");
  py::register_exception<InitFailed>(m, "InitFailedError");

  py::class_<Instance>(m, "Instance")
      .def_property_readonly("d", [](const Instance& i) { return i.dims.d; })
      .def_property_readonly("k", [](const Instance& i) { return i.dims.k; })
      .def_property_readonly("beta", [](const Instance& i) { return i.beta; })
      .def_property_readonly("seed", [](const Instance& i) { return i.seed; })
      .def_property_readonly("variant",
                             [](const Instance& i) { return variant_to_string(i.op.variant); })
      .def_property_readonly("x_star", [](const Instance& i) { return i.x_star; })
      .def_property_readonly("b", [](const Instance& i) { return i.b; })
      .def_property_readonly("incoherence_mu",
                             [](const Instance& i) { return i.incoherence_mu; })
      .def_property_readonly(
          "spectrum", [](const Instance& i) { return i.spectrum.values; })
      .def("__repr__", [](const Instance& i) {
        return "<Instance " + variant_to_string(i.op.variant) + " d=" +
               std::to_string(i.dims.d) + " k=" + std::to_string(i.dims.k) + ">";
      });

  m.def("generate_instance", &make_instance, py::arg("d"), py::arg("k"),
        py::arg("spectrum"), py::arg("variant"), py::arg("beta"), py::arg("seed"),
        py::arg("L") = 0, py::arg("p") = 0.0,
        "Deterministically generate a problem instance from a seed.");
  m.def("instance_to_json", &instance_to_json, py::arg("instance"));
  m.def("instance_from_json", &instance_from_json, py::arg("json_text"));
  m.def(
      "save_instance",
      [](const Instance& inst, const std::string& path) {
        io::write_file(path, instance_to_json(inst));
      },
      py::arg("instance"), py::arg("path"));
  m.def(
      "load_instance",
      [](const std::string& path) { return instance_from_json(io::read_file(path)); },
      py::arg("path"));

  m.def("loss", &loss, py::arg("instance"), py::arg("X"));
  m.def("gradient", &gradient, py::arg("instance"), py::arg("X"));

  // Orbit geometry. Functions take the base point and branch explicitly.
  m.def(
      "project_to_orbit",
      [](const Eigen::MatrixXd& x0, int branch, const Eigen::MatrixXd& X) {
        ProjectionResult r = project_to_orbit(OrbitSpec(x0, branch), X);
        py::dict out;
        out["pi_x"] = r.pi_x;
        out["u"] = r.u;
        out["branch"] = r.branch;
        out["distance"] = r.distance;
        return out;
      },
      py::arg("x0"), py::arg("branch"), py::arg("X"));
  m.def(
      "eta",
      [](const Eigen::MatrixXd& x0, int branch, const Eigen::MatrixXd& X) {
        return eta(OrbitSpec(x0, branch), X);
      },
      py::arg("x0"), py::arg("branch"), py::arg("X"),
      "Squared distance to the nearer of the two branches.");
  m.def(
      "decompose",
      [](const Eigen::MatrixXd& x0, int branch, const Eigen::MatrixXd& X,
         double tube_radius) {
        NormalCoordinates c = decompose(OrbitSpec(x0, branch), X, tube_radius);
        py::dict out;
        out["s"] = c.s;
        out["y"] = c.y;
        out["u"] = c.u;
        return out;
      },
      py::arg("x0"), py::arg("branch"), py::arg("X"), py::arg("tube_radius") = -1.0);
  m.def(
      "recompose",
      [](const Eigen::MatrixXd& x0, int branch, const Eigen::MatrixXd& s,
         const Eigen::MatrixXd& y, const Eigen::MatrixXd& u) {
        NormalCoordinates c;
        c.s = s;
        c.y = y;
        c.u = u;
        return recompose(OrbitSpec(x0, branch), c);
      },
      py::arg("x0"), py::arg("branch"), py::arg("s"), py::arg("y"), py::arg("u"));
  m.def(
      "normal_determinant",
      [](const Eigen::MatrixXd& x0, int branch, const Eigen::MatrixXd& X) {
        return normal_determinant(OrbitSpec(x0, branch), X);
      },
      py::arg("x0"), py::arg("branch"), py::arg("X"));
  m.def(
      "normal_determinant_closed_form",
      [](const Eigen::MatrixXd& x0) { return normal_determinant_closed_form(OrbitSpec(x0)); },
      py::arg("x0"));
  m.def(
      "tubular_radius",
      [](const Eigen::MatrixXd& x0, double D) { return tubular_radius(OrbitSpec(x0), D); },
      py::arg("x0"), py::arg("D"));
  m.def(
      "separation_lower_bound",
      [](const Eigen::MatrixXd& x0) { return separation_lower_bound(OrbitSpec(x0)); },
      py::arg("x0"));

  m.def("init_gradient_descent", &default_start, py::arg("instance"), py::arg("tol") = 1e-6,
        py::arg("max_iters") = 200000,
        "Deterministic stationary-point search used as the sampler start.");

  m.def(
      "run_chains",
      [](const Instance& inst, double h, long steps, long burnin, long thin, int chains,
         std::uint64_t seed, py::object x0, int threads, bool store_x, double init_tol,
         long long init_iters) {
        RunConfig cfg = make_config(inst.beta, h, steps, burnin, thin, chains, seed);
        Eigen::MatrixXd start = x0.is_none() ? default_start(inst, init_tol, init_iters)
                                             : x0.cast<Eigen::MatrixXd>();
        std::vector<Trajectory> trajs = run_chains(inst, cfg, start, threads, store_x);
        py::list out;
        for (const Trajectory& t : trajs) out.append(trajectory_to_dict(t));
        return out;
      },
      py::arg("instance"), py::arg("h"), py::arg("steps"), py::arg("burnin") = -1,
      py::arg("thin") = 10, py::arg("chains") = 1, py::arg("seed") = 0,
      py::arg("x0") = py::none(), py::arg("threads") = 1, py::arg("store_x") = false,
      py::arg("init_tol") = 1e-6, py::arg("init_iters") = 200000,
      "Run Euler-Maruyama Langevin chains; returns one dict per chain.");

  m.def(
      "diagnose",
      [](const Instance& inst, double h, long steps, long burnin, long thin, int chains,
         std::uint64_t seed, int threads, double init_tol, long long init_iters) {
        RunConfig cfg = make_config(inst.beta, h, steps, burnin, thin, chains, seed);
        Eigen::MatrixXd start = default_start(inst, init_tol, init_iters);
        std::vector<Trajectory> trajs = run_chains(inst, cfg, start, threads, true);
        DiagnosticsReport rep = assemble_report(inst, trajs);
        py::dict out = report_to_dict(rep);
        out["json"] = report_to_json(rep);
        return out;
      },
      py::arg("instance"), py::arg("h"), py::arg("steps"), py::arg("burnin") = -1,
      py::arg("thin") = 10, py::arg("chains") = 2, py::arg("seed") = 0,
      py::arg("threads") = 1, py::arg("init_tol") = 1e-6, py::arg("init_iters") = 200000,
      "Run chains and assemble the full diagnostics report.");

  m.def(
      "iact",
      [](const std::vector<double>& series) {
        IactResult r = iact(series);
        return py::make_tuple(r.value, r.note);
      },
      py::arg("series"),
      "Integrated autocorrelation time (0.5 for an i.i.d. series).");

  // Scalar comparison process.
  m.def(
      "cir_simulate",
      [](double gamma, double n_tilde, double y0, double h, double horizon,
         std::uint64_t seed, int paths) {
        CirParams p;
        p.gamma = gamma;
        p.n_tilde = n_tilde;
        p.y0 = y0;
        p.h = h;
        p.horizon = horizon;
        RngStream rng(seed, 0);
        return cir_simulate(p, rng, paths);
      },
      py::arg("gamma"), py::arg("n_tilde"), py::arg("y0"), py::arg("h"), py::arg("horizon"),
      py::arg("seed"), py::arg("paths"),
      "Full-truncation Euler paths, shape (paths, time_points).");
  m.def(
      "ou_squares_simulate",
      [](double gamma, double n_tilde, double y0, double h, double horizon,
         std::uint64_t seed, int paths) {
        CirParams p;
        p.gamma = gamma;
        p.n_tilde = n_tilde;
        p.y0 = y0;
        p.h = h;
        p.horizon = horizon;
        RngStream rng(seed, 0);
        return ou_squares_simulate(p, rng, paths);
      },
      py::arg("gamma"), py::arg("n_tilde"), py::arg("y0"), py::arg("h"), py::arg("horizon"),
      py::arg("seed"), py::arg("paths"),
      "Exact-transition sum-of-squared-OU paths of the same process.");
  m.def(
      "cir_mean_closed_form",
      [](double gamma, double n_tilde, double y0, double t) {
        CirParams p;
        p.gamma = gamma;
        p.n_tilde = n_tilde;
        p.y0 = y0;
        return cir_mean_closed_form(p, t);
      },
      py::arg("gamma"), py::arg("n_tilde"), py::arg("y0"), py::arg("t"));
  m.def(
      "cir_envelope_quantile",
      [](double gamma, double n_tilde, double y0, double h, double horizon,
         double confidence, std::uint64_t seed, int paths) {
        CirParams p;
        p.gamma = gamma;
        p.n_tilde = n_tilde;
        p.y0 = y0;
        p.h = h;
        p.horizon = horizon;
        RngStream rng(seed, 0);
        EnvelopeResult r = cir_envelope_quantile(p, confidence, horizon, rng, paths);
        return py::make_tuple(r.empirical_quantile, r.analytic_envelope);
      },
      py::arg("gamma"), py::arg("n_tilde"), py::arg("y0"), py::arg("h"), py::arg("horizon"),
      py::arg("confidence"), py::arg("seed"), py::arg("paths") = 10000);

  // Torus example.
  m.def(
      "torus_loss", [](double x, double y, double z) { return torus_loss({x, y, z}); },
      py::arg("x"), py::arg("y"), py::arg("z"));
  m.def(
      "torus_normal_determinant",
      [](double x, double y, double z) { return torus_normal_determinant({x, y, z}); },
      py::arg("x"), py::arg("y"), py::arg("z"));
  m.def(
      "torus_decomposition_check",
      [](double beta, const std::string& chi, double s_max) {
        TorusCheckResult r = torus_decomposition_check(beta, chi, s_max);
        py::dict out;
        out["lhs"] = r.lhs;
        out["rhs"] = r.rhs;
        out["converged"] = r.converged;
        out["richardson_rel"] = r.richardson_rel;
        return out;
      },
      py::arg("beta"), py::arg("chi"), py::arg("s_max"));
  m.def(
      "torus_langevin_samples",
      [](double beta, double h, long steps, long burnin, long thin, std::uint64_t seed) {
        TorusSamples s = torus_langevin_samples(beta, h, steps, burnin, thin, seed);
        py::dict out;
        out["u"] = s.u;
        out["s"] = s.s;
        out["v"] = s.v;
        return out;
      },
      py::arg("beta"), py::arg("h"), py::arg("steps"), py::arg("burnin"), py::arg("thin"),
      py::arg("seed"));
}
