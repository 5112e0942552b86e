#include "orbit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "json.hpp"
#include "orbit/io.hpp"
#include "orbit/stats.hpp"

namespace orbit {

NearnessResult nearness_check(const Trajectory& traj, double radius) {
  if (traj.records.empty()) throw std::invalid_argument("nearness_check: empty trajectory");
  if (!(radius >= 0.0)) throw std::invalid_argument("nearness_check: radius must be >= 0");
  NearnessResult out;
  long inside = 0, total = 0;
  int prev_branch = 0;
  for (const TrajectoryRecord& r : traj.records) {
    if (std::isfinite(r.eta)) {
      ++total;
      if (std::sqrt(r.eta) <= radius) ++inside;
      out.max_eta = std::max(out.max_eta, r.eta);
    }
    if (r.branch != 0) {
      if (prev_branch != 0 && r.branch != prev_branch) ++out.flips;
      prev_branch = r.branch;
    }
  }
  out.fraction_inside = total > 0 ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
  return out;
}

double ks_uniform_angles(std::vector<double> angles) {
  return stats::ks_statistic_uniform(std::move(angles), 0.0, 2.0 * std::numbers::pi);
}

double orbit_uniformity(const Trajectory& traj) {
  std::vector<double> angles;
  for (const TrajectoryRecord& r : traj.records)
    if (r.has_angle && std::isfinite(r.angle)) angles.push_back(r.angle);
  if (angles.empty())
    throw Unsupported("orbit_uniformity: no angle records (requires k = 2)");
  if (angles.size() < 1000)
    throw std::invalid_argument("orbit_uniformity: need at least 1000 angle records");
  return ks_uniform_angles(std::move(angles));
}

GradCorrResult grad_correlation_check(const Instance& inst, const OrbitSpec& spec,
                                      const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.empty()) throw std::domain_error("grad_correlation_check: empty sample set");
  const double d = static_cast<double>(inst.dims.d);
  const double k = static_cast<double>(inst.dims.k);
  const double kappa = inst.spectrum.kappa();
  const double beta = inst.beta;
  double shape = 0.0;
  switch (inst.op.variant) {
    case OperatorVariant::Factorization:
      shape = k * k * kappa * kappa * d / (beta * beta);
      break;
    case OperatorVariant::Sensing:
      shape = d * k * kappa * kappa *
              std::log(static_cast<double>(inst.op.sensing_mats.size())) / (beta * beta);
      break;
    case OperatorVariant::Completion:
      shape = d * kappa * kappa * k * k * k * std::log(d) / (inst.op.p * beta * beta);
      break;
  }
  if (!(shape > 0.0)) shape = 1e-300;  // e.g. log(1) = 0 at L = 1

  const double sigma_min2 = inst.spectrum.sigma_min() * inst.spectrum.sigma_min();
  const double c1 = 1.0 / 16.0;
  const double tube = tubular_radius(spec, 2.0);

  std::vector<double> required;
  required.reserve(samples.size());
  for (const Eigen::MatrixXd& X : samples) {
    ProjectionResult pr = project_to_orbit(spec, X);
    if (pr.distance > tube)
      throw TubeExceeded("grad_correlation_check: sample outside the tube");
    double e = pr.distance * pr.distance;
    // Same roundoff floor as tangent_basis: eta below 1e-16 ||X||^2 means the
    // alignment ratio is pure noise.
    if (!(e > 1e-16 * X.squaredNorm()))
      throw std::domain_error("grad_correlation_check: sample lies on the orbit");
    double lhs = gradient(inst, X).cwiseProduct(X - pr.pi_x).sum();
    required.push_back((c1 * sigma_min2 * e - lhs) / shape);
  }

  GradCorrResult out;
  out.c1 = c1;
  out.shape = shape;
  out.n = static_cast<long>(required.size());
  out.c2 = std::max(0.0, stats::quantile(required, 0.95));
  double tol = 1e-12 * (1.0 + std::fabs(out.c2));
  long violations = 0;
  for (double r : required)
    if (r > out.c2 + tol) ++violations;
  out.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(required.size());
  return out;
}

IactResult iact(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 1000) throw std::invalid_argument("iact: need at least 1000 samples");
  double m = stats::mean(series);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = series[i] - m;

  auto gamma_at = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) s += c[i] * c[i + t];
    return s / static_cast<double>(n);
  };

  double g0 = gamma_at(0);
  if (!(g0 > 0.0)) return {0.5, "constant series; autocorrelation undefined, reported as 0.5"};

  // Sum of lag-pair autocorrelations, truncated at the first non-positive
  // pair (initial-positive-sequence rule).
  const std::size_t max_lag = std::min(n - 1, static_cast<std::size_t>(20000));
  double sum = 0.0;
  bool truncated = true;
  for (std::size_t m2 = 0; 2 * m2 < max_lag; ++m2) {
    double pair = gamma_at(2 * m2) / g0;
    if (2 * m2 + 1 < n) pair += gamma_at(2 * m2 + 1) / g0;
    if (pair <= 0.0) {
      truncated = false;
      break;
    }
    sum += pair;
  }

  IactResult out;
  out.value = sum - 0.5;
  if (truncated) out.note = "autocorrelation still positive at the lag cap; IACT may be underestimated";
  if (out.value < 0.5) {
    out.value = 0.5;
    out.note = "series anticorrelated; IACT below the 0.5 i.i.d. floor, clamped";
  }
  return out;
}

double loss_constancy_cv(const Instance& inst, const Eigen::MatrixXd& X, int rotations,
                         RngStream& rng) {
  if (rotations < 2) throw std::invalid_argument("loss_constancy_cv: need >= 2 rotations");
  const int k = static_cast<int>(X.cols());
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(rotations));
  for (int r = 0; r < rotations; ++r) {
    Eigen::MatrixXd U = haar_frame(rng, k, k);
    if (U.determinant() < 0.0) U.col(k - 1) = -U.col(k - 1);  // stay on SO(k)
    vals.push_back(loss(inst, X * U));
  }
  double m = stats::mean(vals);
  double sd = vals.size() > 1 ? std::sqrt(stats::variance(vals)) : 0.0;
  return sd / std::max(std::fabs(m), 1e-300);
}

std::vector<Eigen::MatrixXd> synthetic_tube_points(const OrbitSpec& spec, double radius,
                                                   int count, RngStream& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("synthetic_tube_points: radius must be > 0");
  if (radius > tubular_radius(spec, 2.0))
    throw std::invalid_argument("synthetic_tube_points: radius exceeds the default tube");
  if (count < 1) throw std::invalid_argument("synthetic_tube_points: count must be >= 1");
  const int d = spec.d();
  const int k = spec.k();
  Eigen::MatrixXd G = spec.x0.transpose() * spec.x0;
  auto ldlt = G.ldlt();
  double want = spec.branch == 1 ? 1.0 : -1.0;

  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    Eigen::MatrixXd A = gaussian_matrix(rng, k, k);
    Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::MatrixXd Z = gaussian_matrix(rng, d, k);
    Eigen::MatrixXd Y = Z - spec.x0 * ldlt.solve(spec.x0.transpose() * Z);
    Eigen::MatrixXd delta = spec.x0 * ldlt.solve(S) + Y;
    double nrm = delta.norm();
    if (!(nrm > 0.0)) continue;
    double target = radius * rng.next_uniform();
    if (!(target > 0.0)) continue;
    double scale = target / nrm;

    NormalCoordinates cds;
    cds.s = scale * S;
    cds.y = scale * Y;
    Eigen::MatrixXd U = haar_frame(rng, k, k);
    if (U.determinant() * want < 0.0) U.col(k - 1) = -U.col(k - 1);
    cds.u = U;
    out.push_back(recompose(spec, cds));
  }
  return out;
}

namespace {

void append_note(DiagnosticsReport& rep, const std::string& prefix, const std::string& msg) {
  rep.notes.push_back(prefix + ": " + msg);
}

double sanitize(double v, DiagnosticsReport& rep, const char* field) {
  if (std::isfinite(v)) return v;
  rep.notes.push_back(std::string(field) + ": non-finite value replaced by -1");
  return -1.0;
}

}  // namespace

DiagnosticsReport assemble_report(const Instance& inst, const std::vector<Trajectory>& trajs,
                                  double tube_radius,
                                  const std::vector<Eigen::MatrixXd>& extra_tube_points) {
  DiagnosticsReport rep;
  int home = trajs.empty() ? 1 : trajs.front().home_branch;
  OrbitSpec spec(inst.x_star, home);
  double radius = tube_radius < 0.0 ? tubular_radius(spec, 2.0) : tube_radius;
  rep.tube_radius_used = radius;

  // Nearness, pooled over chains.
  try {
    long inside = 0, total = 0;
    for (const Trajectory& t : trajs) {
      if (t.records.empty()) continue;
      NearnessResult nr = nearness_check(t, radius);
      long valid = 0;
      for (const TrajectoryRecord& r : t.records)
        if (std::isfinite(r.eta)) ++valid;
      inside += static_cast<long>(std::llround(nr.fraction_inside * valid));
      total += valid;
      rep.max_eta = std::max(rep.max_eta, nr.max_eta);
      rep.branch_flips += nr.flips;
      if (t.diverged)
        append_note(rep, "chain " + std::to_string(t.chain_id), "diverged: " + t.note);
      else if (!t.note.empty())
        append_note(rep, "chain " + std::to_string(t.chain_id), t.note);
    }
    if (total == 0) throw std::invalid_argument("no finite eta records");
    rep.nearness_fraction = static_cast<double>(inside) / static_cast<double>(total);
  } catch (const std::exception& e) {
    append_note(rep, "nearness", e.what());
  }

  // Angle uniformity, pooled over chains.
  try {
    std::vector<double> angles;
    for (const Trajectory& t : trajs)
      for (const TrajectoryRecord& r : t.records)
        if (r.has_angle && std::isfinite(r.angle)) angles.push_back(r.angle);
    if (angles.empty()) throw Unsupported("no angle records (requires k = 2)");
    if (angles.size() < 1000) throw std::invalid_argument("need at least 1000 angle records");
    rep.ks_uniform_angle = ks_uniform_angles(std::move(angles));
  } catch (const std::exception& e) {
    append_note(rep, "orbit_uniformity", e.what());
  }

  // Autocorrelation times from the first non-diverged chain.
  const Trajectory* lead = nullptr;
  for (const Trajectory& t : trajs)
    if (!t.diverged && !t.records.empty()) {
      lead = &t;
      break;
    }
  if (lead != nullptr) {
    std::vector<double> eta_series, angle_series;
    for (const TrajectoryRecord& r : lead->records) {
      if (std::isfinite(r.eta)) eta_series.push_back(r.eta);
      if (r.has_angle && std::isfinite(r.angle)) angle_series.push_back(r.angle);
    }
    try {
      IactResult ir = iact(eta_series);
      rep.iact_eta = ir.value;
      if (!ir.note.empty()) append_note(rep, "iact_eta", ir.note);
    } catch (const std::exception& e) {
      append_note(rep, "iact_eta", e.what());
    }
    try {
      if (!angle_series.empty()) {
        IactResult ir = iact(angle_series);
        rep.iact_angle = ir.value;
        if (!ir.note.empty()) append_note(rep, "iact_angle", ir.note);
      }
    } catch (const std::exception& e) {
      append_note(rep, "iact_angle", e.what());
    }

    // CIR moment fit on the eta series: lag-1 autocorrelation fixes gamma,
    // the stationary mean n_tilde / gamma fixes n_tilde.
    try {
      if (eta_series.size() >= 1000 && lead->records.size() >= 2) {
        double dt = lead->records[1].time - lead->records[0].time;
        double m = stats::mean(eta_series);
        double g0 = 0.0, g1 = 0.0;
        for (std::size_t i = 0; i < eta_series.size(); ++i) {
          double a = eta_series[i] - m;
          g0 += a * a;
          if (i + 1 < eta_series.size()) g1 += a * (eta_series[i + 1] - m);
        }
        if (g0 > 0.0 && g1 > 0.0 && dt > 0.0) {
          double rho1 = g1 / g0;
          if (rho1 < 1.0) {
            rep.cir_fit.gamma_hat = -std::log(rho1) / dt;
            rep.cir_fit.n_tilde_hat = rep.cir_fit.gamma_hat * m;
          } else {
            append_note(rep, "cir_fit", "lag-1 autocorrelation >= 1; fit skipped");
          }
        } else {
          append_note(rep, "cir_fit", "degenerate eta series; fit skipped");
        }
      } else {
        append_note(rep, "cir_fit", "too few records for the moment fit");
      }
    } catch (const std::exception& e) {
      append_note(rep, "cir_fit", e.what());
    }
  } else {
    append_note(rep, "iact", "no usable chain");
  }

  // Tube-point diagnostics: determinant constancy, loss constancy over
  // orbit copies, gradient correlation.
  try {
    std::vector<Eigen::MatrixXd> pts = extra_tube_points;
    RngStream diag_rng(inst.seed, 2000);
    if (pts.empty())
      pts = synthetic_tube_points(spec, 1e-3 * spec.sigma_min(), 24, diag_rng);

    try {
      std::vector<double> dets;
      dets.reserve(pts.size());
      for (const Eigen::MatrixXd& X : pts) dets.push_back(normal_determinant(spec, X));
      double m = stats::mean(dets);
      double sd = dets.size() > 1 ? std::sqrt(stats::variance(dets)) : 0.0;
      rep.det_constancy_cv = sd / std::max(std::fabs(m), 1e-300);
    } catch (const std::exception& e) {
      append_note(rep, "det_constancy", e.what());
    }

    try {
      double worst = 0.0;
      for (std::size_t i = 0; i < pts.size() && i < 3; ++i)
        worst = std::max(worst, loss_constancy_cv(inst, pts[i], 100, diag_rng));
      rep.f_constancy_cv = worst;
    } catch (const std::exception& e) {
      append_note(rep, "f_constancy", e.what());
    }

    try {
      GradCorrResult gc = grad_correlation_check(inst, spec, pts);
      rep.grad_corr_violations = gc.violation_fraction;
    } catch (const std::exception& e) {
      append_note(rep, "grad_correlation", e.what());
    }
  } catch (const std::exception& e) {
    append_note(rep, "tube_points", e.what());
  }

  rep.nearness_fraction = sanitize(rep.nearness_fraction, rep, "nearness_fraction");
  rep.max_eta = sanitize(rep.max_eta, rep, "max_eta");
  rep.ks_uniform_angle = sanitize(rep.ks_uniform_angle, rep, "ks_uniform_angle");
  rep.f_constancy_cv = sanitize(rep.f_constancy_cv, rep, "f_constancy_cv");
  rep.det_constancy_cv = sanitize(rep.det_constancy_cv, rep, "det_constancy_cv");
  rep.grad_corr_violations = sanitize(rep.grad_corr_violations, rep, "grad_corr_violations");
  rep.iact_eta = sanitize(rep.iact_eta, rep, "iact_eta");
  rep.iact_angle = sanitize(rep.iact_angle, rep, "iact_angle");
  rep.cir_fit.gamma_hat = sanitize(rep.cir_fit.gamma_hat, rep, "cir_fit.gamma_hat");
  rep.cir_fit.n_tilde_hat = sanitize(rep.cir_fit.n_tilde_hat, rep, "cir_fit.n_tilde_hat");
  return rep;
}

std::string report_to_json(const DiagnosticsReport& rep) {
  io::JsonWriter w;
  w.begin_object();
  w.key("nearness_fraction").value(rep.nearness_fraction);
  w.key("max_eta").value(rep.max_eta);
  w.key("tube_radius_used").value(rep.tube_radius_used);
  w.key("branch_flips").value(static_cast<long long>(rep.branch_flips));
  w.key("ks_uniform_angle").value(rep.ks_uniform_angle);
  w.key("f_constancy_cv").value(rep.f_constancy_cv);
  w.key("det_constancy_cv").value(rep.det_constancy_cv);
  w.key("grad_corr_violations").value(rep.grad_corr_violations);
  w.key("iact_eta").value(rep.iact_eta);
  w.key("iact_angle").value(rep.iact_angle);
  w.key("cir_fit").begin_object();
  w.key("gamma_hat").value(rep.cir_fit.gamma_hat);
  w.key("n_tilde_hat").value(rep.cir_fit.n_tilde_hat);
  w.end_object();
  w.key("notes").begin_array();
  for (const std::string& n : rep.notes) w.value(n);
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

DiagnosticsReport report_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  DiagnosticsReport rep;
  rep.nearness_fraction = j.at("nearness_fraction").get<double>();
  rep.max_eta = j.at("max_eta").get<double>();
  rep.tube_radius_used = j.at("tube_radius_used").get<double>();
  rep.branch_flips = j.at("branch_flips").get<long>();
  rep.ks_uniform_angle = j.at("ks_uniform_angle").get<double>();
  rep.f_constancy_cv = j.at("f_constancy_cv").get<double>();
  rep.det_constancy_cv = j.at("det_constancy_cv").get<double>();
  rep.grad_corr_violations = j.at("grad_corr_violations").get<double>();
  rep.iact_eta = j.at("iact_eta").get<double>();
  rep.iact_angle = j.at("iact_angle").get<double>();
  rep.cir_fit.gamma_hat = j.at("cir_fit").at("gamma_hat").get<double>();
  rep.cir_fit.n_tilde_hat = j.at("cir_fit").at("n_tilde_hat").get<double>();
  rep.notes = j.at("notes").get<std::vector<std::string>>();
  return rep;
}

}  // namespace orbit
