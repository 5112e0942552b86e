// Command-line workbench: instance generation, Langevin sampling, report
// assembly, the torus warm-up, and CIR reference simulations.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "orbit/diagnostics.hpp"
#include "orbit/io.hpp"
#include "orbit/manifold.hpp"
#include "orbit/operators.hpp"
#include "orbit/processes.hpp"
#include "orbit/sampler.hpp"
#include "orbit/torus.hpp"
#include "orbit/types.hpp"

namespace {

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ORBIT_LANGEVIN_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

orbit::SpectrumSpec make_spectrum(int k, double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || !(sigma_max > 0.0) || sigma_min > sigma_max)
    throw std::invalid_argument("need 0 < sigma-min <= sigma-max");
  std::vector<double> values;
  if (k == 1) {
    if (sigma_min != sigma_max)
      throw std::invalid_argument("k = 1 requires sigma-min == sigma-max");
    values.push_back(sigma_min);
  } else {
    for (int i = 0; i < k; ++i)
      values.push_back(sigma_max + (sigma_min - sigma_max) * i / (k - 1));
  }
  return orbit::SpectrumSpec(values);
}

Eigen::MatrixXd recompute_x0(const orbit::Instance& inst, double tol, long iters) {
  // The start point is a pure function of the instance seed, so `sample` and
  // `diagnose` agree on it without sharing files.
  orbit::RngStream rng(inst.seed, orbit::kStreamInit);
  return orbit::init_gradient_descent(inst, rng, tol, iters);
}

struct SampleFlags {
  std::string instance_path;
  long steps = 10000;
  double h = 1e-4;
  double beta = -1.0;  // negative: use the instance's beta
  int chains = 2;
  long burnin = -1;
  long thin = 10;
  std::uint64_t seed = 0;
  int threads = 0;
  double init_tol = 1e-6;
  long init_iters = 200000;
};

void add_sample_flags(CLI::App* sub, SampleFlags& f) {
  sub->set_help_flag("--help", "print help and exit");
  sub->add_option("--instance", f.instance_path, "instance JSON path")->required();
  sub->add_option("--steps", f.steps, "Euler steps per chain");
  sub->add_option("--h", f.h, "step size");
  sub->add_option("--beta", f.beta, "override the instance inverse temperature");
  sub->add_option("--chains", f.chains, "number of chains");
  sub->add_option("--burnin", f.burnin, "discarded steps (-1: steps/10)");
  sub->add_option("--thin", f.thin, "record every thin-th step");
  sub->add_option("--seed", f.seed, "run seed")->required();
  sub->add_option("--threads", f.threads,
                  "worker threads (0: ORBIT_LANGEVIN_THREADS or hardware)");
  sub->add_option("--init-tol", f.init_tol, "gradient tolerance for the start point");
  sub->add_option("--init-iters", f.init_iters, "max init iterations");
}

std::vector<orbit::Trajectory> run_from_flags(const SampleFlags& f, orbit::Instance& inst) {
  inst = orbit::load_instance(f.instance_path);
  orbit::RunConfig cfg;
  cfg.beta = f.beta > 0.0 ? f.beta : inst.beta;
  cfg.h = f.h;
  cfg.steps = f.steps;
  cfg.burnin = f.burnin;
  cfg.thin = f.thin;
  cfg.chains = f.chains;
  cfg.seed = f.seed;
  cfg.validate();
  Eigen::MatrixXd x0 = recompute_x0(inst, f.init_tol, f.init_iters);
  return orbit::run_chains(inst, cfg, x0, resolve_threads(f.threads));
}

int cmd_generate(int d, int k, const std::string& op_name, int L, bool has_L, double p,
                 bool has_p, double beta, double sigma_min, double sigma_max,
                 std::uint64_t seed, const std::string& out) {
  orbit::OperatorVariant variant = orbit::variant_from_name(op_name);
  if (has_L && variant != orbit::OperatorVariant::Sensing)
    throw std::invalid_argument("--L is only valid with --operator sensing");
  if (has_p && variant != orbit::OperatorVariant::Completion)
    throw std::invalid_argument("--p is only valid with --operator completion");
  if (variant == orbit::OperatorVariant::Sensing && !has_L)
    throw std::invalid_argument("--operator sensing requires --L");
  if (variant == orbit::OperatorVariant::Completion && !has_p)
    throw std::invalid_argument("--operator completion requires --p");
  orbit::GenerateOptions opts;
  opts.L = L;
  opts.p = p;
  orbit::Instance inst = orbit::generate_instance(
      orbit::Dims(d, k), make_spectrum(k, sigma_min, sigma_max), variant, opts, beta, seed);
  orbit::save_instance(inst, out);
  return 0;
}

int cmd_sample(const SampleFlags& f, const std::string& out_prefix) {
  orbit::Instance inst;
  std::vector<orbit::Trajectory> trajs = run_from_flags(f, inst);
  bool diverged = false;
  for (const orbit::Trajectory& t : trajs) {
    orbit::io::write_file(out_prefix + "_chain" + std::to_string(t.chain_id) + ".csv",
                          orbit::trajectory_to_csv(t));
    if (t.diverged) {
      diverged = true;
      std::fprintf(stderr, "chain %d diverged at step %lld\n", t.chain_id,
                   t.diverged_at_step);
    }
  }
  return diverged ? 1 : 0;
}

int cmd_diagnose(const SampleFlags& f, double radius, const std::string& out) {
  orbit::Instance inst;
  std::vector<orbit::Trajectory> trajs = run_from_flags(f, inst);
  orbit::DiagnosticsReport rep = orbit::assemble_report(inst, trajs, radius);
  orbit::io::write_file(out, orbit::report_to_json(rep));
  for (const orbit::Trajectory& t : trajs)
    if (t.diverged) return 1;
  return 0;
}

int cmd_torus(double beta, double s_max, const std::string& chi, long steps, double h,
              long burnin, long thin, std::uint64_t seed, const std::string& out_prefix) {
  std::vector<std::string> chis;
  if (chi == "all")
    chis = {"one", "cos_u", "s2"};
  else
    chis = {chi};
  std::string csv = "chi,lhs,rhs,converged,richardson_rel\n";
  for (const std::string& c : chis) {
    orbit::TorusCheckResult r = orbit::torus_decomposition_check(beta, c, s_max);
    csv += r.chi + ',' + orbit::io::format_double(r.lhs) + ',' +
           orbit::io::format_double(r.rhs) + ',' + (r.converged ? "1" : "0") + ',' +
           orbit::io::format_double(r.richardson_rel) + '\n';
  }
  orbit::io::write_file(out_prefix + "_check.csv", csv);
  long eff_burnin = burnin >= 0 ? burnin : steps / 10;
  orbit::TorusSamples s = orbit::torus_langevin_samples(beta, h, steps, eff_burnin, thin, seed);
  orbit::io::write_file(out_prefix + "_samples.csv", orbit::torus_samples_to_csv(s));
  return 0;
}

int cmd_cir(double gamma, double n_tilde, double y0, double horizon, double h, int paths,
            std::uint64_t seed, const std::string& method, const std::string& out) {
  orbit::CirParams params;
  params.gamma = gamma;
  params.n_tilde = n_tilde;
  params.y0 = y0;
  params.h = h;
  params.horizon = horizon;
  params.validate();
  if (params.accuracy_warning())
    std::fprintf(stderr, "warning: step size %g exceeds 0.1/gamma = %g; results inaccurate\n",
                 h, 0.1 / gamma);
  orbit::RngStream rng(seed, 0);
  Eigen::MatrixXd sim = method == "ou" ? orbit::ou_squares_simulate(params, rng, paths)
                                       : orbit::cir_simulate(params, rng, paths);
  std::string csv = orbit::process_to_csv(params.time_grid(), sim);
  if (out.empty())
    std::fputs(csv.c_str(), stdout);
  else
    orbit::io::write_file(out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin sampling workbench for orbit-structured posteriors"};
  // Long-only help so that --h stays available as the step-size option.
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write an instance JSON");
  gen->set_help_flag("--help", "print help and exit");
  int g_d = 0, g_k = 0, g_L = 0;
  double g_p = 0.0, g_beta = 1e4, g_smin = 1.0, g_smax = 1.0;
  std::string g_op = "factorization", g_out;
  std::uint64_t g_seed = 0;
  gen->add_option("--d", g_d, "ambient rows")->required();
  gen->add_option("--k", g_k, "factor columns")->required();
  gen->add_option("--operator", g_op, "factorization|sensing|completion")
      ->check(CLI::IsMember({"factorization", "sensing", "completion"}));
  gen->add_option("--L", g_L, "sensing measurement count");
  gen->add_option("--p", g_p, "completion observation probability");
  gen->add_option("--beta", g_beta, "inverse temperature");
  gen->add_option("--sigma-min", g_smin, "smallest planted singular value");
  gen->add_option("--sigma-max", g_smax, "largest planted singular value");
  gen->add_option("--seed", g_seed, "instance seed")->required();
  gen->add_option("--out", g_out, "output path")->required();

  // sample
  auto* smp = app.add_subcommand("sample", "run Langevin chains, write trajectory CSVs");
  SampleFlags s_flags;
  std::string s_prefix;
  add_sample_flags(smp, s_flags);
  smp->add_option("--out-prefix", s_prefix, "prefix for <prefix>_chain<i>.csv")->required();

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "run chains and write a report JSON");
  SampleFlags d_flags;
  std::string d_out;
  double d_radius = -1.0;
  add_sample_flags(dia, d_flags);
  dia->add_option("--radius", d_radius, "tube radius for nearness (-1: default)");
  dia->add_option("--out", d_out, "report path")->required();

  // torus
  auto* tor = app.add_subcommand("torus", "decomposition check and chain marginals");
  tor->set_help_flag("--help", "print help and exit");
  double t_beta = 25.0, t_smax = 0.3, t_h = 0.004;
  long t_steps = 200000, t_burnin = -1, t_thin = 20;
  std::string t_chi = "all", t_prefix;
  std::uint64_t t_seed = 0;
  tor->add_option("--beta", t_beta, "inverse temperature");
  tor->add_option("--s-max", t_smax, "tube radius for the quadrature");
  tor->add_option("--chi", t_chi, "one|cos_u|s2|all")
      ->check(CLI::IsMember({"one", "cos_u", "s2", "all"}));
  tor->add_option("--steps", t_steps, "chain steps");
  tor->add_option("--h", t_h, "step size");
  tor->add_option("--burnin", t_burnin, "discarded steps (-1: steps/10)");
  tor->add_option("--thin", t_thin, "record every thin-th step");
  tor->add_option("--seed", t_seed, "chain seed");
  tor->add_option("--out-prefix", t_prefix, "prefix for _check.csv and _samples.csv")
      ->required();

  // cir
  auto* cir = app.add_subcommand("cir", "simulate the comparison process");
  cir->set_help_flag("--help", "print help and exit");
  double c_gamma = 1.0, c_ntilde = 0.0, c_y0 = 0.0, c_t = 1.0, c_h = 1e-3;
  int c_paths = 1000;
  std::uint64_t c_seed = 0;
  std::string c_method = "euler", c_out;
  cir->add_option("--gamma", c_gamma, "mean-reversion rate")->required();
  cir->add_option("--n-tilde", c_ntilde, "drift constant")->required();
  cir->add_option("--y0", c_y0, "initial value");
  cir->add_option("--t", c_t, "horizon")->required();
  cir->add_option("--h", c_h, "step size");
  cir->add_option("--paths", c_paths, "simulated paths");
  cir->add_option("--seed", c_seed, "stream seed");
  cir->add_option("--method", c_method, "euler|ou")
      ->check(CLI::IsMember({"euler", "ou"}));
  cir->add_option("--out", c_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(g_d, g_k, g_op, g_L, gen->count("--L") > 0, g_p,
                          gen->count("--p") > 0, g_beta, g_smin, g_smax, g_seed, g_out);
    if (smp->parsed()) return cmd_sample(s_flags, s_prefix);
    if (dia->parsed()) return cmd_diagnose(d_flags, d_radius, d_out);
    if (tor->parsed())
      return cmd_torus(t_beta, t_smax, t_chi, t_steps, t_h, t_burnin, t_thin, t_seed,
                       t_prefix);
    if (cir->parsed())
      return cmd_cir(c_gamma, c_ntilde, c_y0, c_t, c_h, c_paths, c_seed, c_method, c_out);
  } catch (const orbit::DivergedChain& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  } catch (const orbit::InitFailed& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  } catch (const orbit::DegenerateProjection& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  } catch (const orbit::TubeExceeded& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
