#include "orbit/processes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "orbit/io.hpp"
#include "orbit/stats.hpp"

namespace orbit {

void CirParams::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("CirParams: gamma must be > 0");
  if (!(n_tilde >= 0.0)) throw std::invalid_argument("CirParams: n_tilde must be >= 0");
  if (!(y0 >= 0.0)) throw std::invalid_argument("CirParams: y0 must be >= 0");
  if (!(h > 0.0)) throw std::invalid_argument("CirParams: h must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("CirParams: horizon must be > 0");
}

int CirParams::time_points() const {
  return static_cast<int>(std::floor(horizon / h + 1e-9)) + 1;
}

std::vector<double> CirParams::time_grid() const {
  std::vector<double> t(static_cast<std::size_t>(time_points()));
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<double>(j) * h;
  return t;
}

double cir_mean_closed_form(const CirParams& params, double t) {
  double decay = std::exp(-params.gamma * t);
  return params.y0 * decay + (params.n_tilde / params.gamma) * (1.0 - decay);
}

Eigen::MatrixXd cir_simulate(const CirParams& params, RngStream& rng, int paths) {
  params.validate();
  if (paths < 1) throw std::invalid_argument("cir_simulate: paths must be >= 1");
  const int T = params.time_points();
  const double sqrt_h = std::sqrt(params.h);
  Eigen::MatrixXd out(paths, T);
  for (int p = 0; p < paths; ++p) {
    double y = params.y0;
    out(p, 0) = y;
    for (int j = 1; j < T; ++j) {
      // y stays nonnegative, so the sqrt sees the clipped value by
      // construction; the proposal itself is clipped afterwards.
      double prop = y + (params.n_tilde - params.gamma * y) * params.h +
                    std::sqrt(y) * sqrt_h * rng.next_gaussian();
      y = std::max(0.0, prop);
      out(p, j) = y;
    }
  }
  return out;
}

Eigen::MatrixXd ou_squares_simulate(const CirParams& params, RngStream& rng, int paths) {
  params.validate();
  if (paths < 1) throw std::invalid_argument("ou_squares_simulate: paths must be >= 1");
  double half = params.n_tilde / 2.0;
  if (!(half > 0.0) || std::fabs(half - std::round(half)) > 1e-12)
    throw std::domain_error("ou_squares_simulate: n_tilde/2 must be a positive integer");
  // Ito: d(sum z_i^2) = (n/4 - gamma sum z_i^2) dt + sqrt(sum z_i^2) dB, so
  // n/4 must equal n_tilde.
  const int n = static_cast<int>(std::llround(4.0 * params.n_tilde));
  const int T = params.time_points();
  const double z_init = std::sqrt(params.y0 / static_cast<double>(n));
  const double decay = std::exp(-params.gamma * params.h / 2.0);
  const double step_std =
      std::sqrt((1.0 - std::exp(-params.gamma * params.h)) / (4.0 * params.gamma));

  Eigen::MatrixXd out(paths, T);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int p = 0; p < paths; ++p) {
    std::fill(z.begin(), z.end(), z_init);
    out(p, 0) = params.y0;
    for (int j = 1; j < T; ++j) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        z[static_cast<std::size_t>(i)] =
            decay * z[static_cast<std::size_t>(i)] + step_std * rng.next_gaussian();
        sum += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
      }
      out(p, j) = sum;
    }
  }
  return out;
}

EnvelopeResult cir_envelope_quantile(const CirParams& params, double confidence,
                                     double horizon, RngStream& rng, int paths) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("cir_envelope_quantile: confidence must be in (0,1)");
  CirParams local = params;
  local.horizon = horizon;
  local.validate();
  Eigen::MatrixXd sim = cir_simulate(local, rng, paths);
  std::vector<double> sups(static_cast<std::size_t>(paths));
  for (int p = 0; p < paths; ++p) sups[static_cast<std::size_t>(p)] = sim.row(p).maxCoeff();
  double eps = 1.0 - confidence;
  EnvelopeResult r;
  r.empirical_quantile = stats::quantile(std::move(sups), confidence);
  r.analytic_envelope =
      4.0 * std::sqrt(params.y0 * params.y0 + params.n_tilde * std::log(1.0 / eps) / params.gamma);
  return r;
}

namespace {

struct QuantileBand {
  double value = 0.0;
  double se = 0.0;
};

// Bootstrap of an empirical quantile through its rank distribution: the
// q-quantile of a resample is (up to interpolation) the order statistic at a
// Binomial(n, q) rank, approximated here by its normal limit.
QuantileBand quantile_with_band(const std::vector<double>& sorted, double q, RngStream& rng,
                                int rounds) {
  QuantileBand out;
  out.value = stats::quantile_sorted(sorted, q);
  const double n = static_cast<double>(sorted.size());
  if (sorted.size() < 2 || rounds < 2) return out;
  const double center = q * (n - 1.0);
  const double spread = std::sqrt(n * q * (1.0 - q));
  std::vector<double> boot(static_cast<std::size_t>(rounds));
  for (int b = 0; b < rounds; ++b) {
    double r = std::round(center + spread * rng.next_gaussian());
    r = std::clamp(r, 0.0, n - 1.0);
    boot[static_cast<std::size_t>(b)] = sorted[static_cast<std::size_t>(r)];
  }
  out.se = std::sqrt(stats::variance(boot));
  return out;
}

double interp_at(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  std::size_t lo = hi - 1;
  double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return (1.0 - w) * ys[lo] + w * ys[hi];
}

}  // namespace

DominanceReport dominance_compare(const Eigen::MatrixXd& observed,
                                  const std::vector<double>& observed_times,
                                  const CirParams& params, RngStream& rng, int sim_paths,
                                  int bootstrap_rounds) {
  if (observed.cols() != static_cast<Eigen::Index>(observed_times.size()))
    throw std::invalid_argument("dominance_compare: observed columns must match the time grid");
  if (observed.rows() < 1 || observed.cols() < 1)
    throw std::invalid_argument("dominance_compare: observed must be nonempty");

  Eigen::MatrixXd sim = cir_simulate(params, rng, sim_paths);
  std::vector<double> sim_times = params.time_grid();

  const double levels[3] = {0.5, 0.9, 0.99};
  std::vector<double> sim_q[3], sim_se[3];
  for (int jq = 0; jq < 3; ++jq) {
    sim_q[jq].resize(sim_times.size());
    sim_se[jq].resize(sim_times.size());
  }
  std::vector<double> col(static_cast<std::size_t>(sim.rows()));
  for (std::size_t j = 0; j < sim_times.size(); ++j) {
    for (Eigen::Index p = 0; p < sim.rows(); ++p)
      col[static_cast<std::size_t>(p)] = sim(p, static_cast<Eigen::Index>(j));
    std::sort(col.begin(), col.end());
    for (int jq = 0; jq < 3; ++jq) {
      QuantileBand qb = quantile_with_band(col, levels[jq], rng, bootstrap_rounds);
      sim_q[jq][j] = qb.value;
      sim_se[jq][j] = qb.se;
    }
  }

  DominanceReport rep;
  rep.times = observed_times;
  bool grids_match = observed_times.size() == sim_times.size();
  if (grids_match)
    for (std::size_t j = 0; j < sim_times.size(); ++j)
      if (std::fabs(observed_times[j] - sim_times[j]) > 1e-9 * (1.0 + std::fabs(sim_times[j]))) {
        grids_match = false;
        break;
      }
  rep.interpolated = !grids_match;
  if (rep.interpolated)
    rep.note = "observed grid differs from the simulation grid; CIR quantiles linearly interpolated";
  if (params.accuracy_warning()) {
    if (!rep.note.empty()) rep.note += "; ";
    rep.note += "step size exceeds 0.1/gamma; CIR quantiles may be inaccurate";
  }

  std::vector<double>* obs_out[3] = {&rep.obs_q50, &rep.obs_q90, &rep.obs_q99};
  std::vector<double>* cir_out[3] = {&rep.cir_q50, &rep.cir_q90, &rep.cir_q99};
  std::vector<double>* band_out[3] = {&rep.band_q50, &rep.band_q90, &rep.band_q99};

  std::vector<double> obs_col(static_cast<std::size_t>(observed.rows()));
  rep.flags.assign(observed_times.size(), 0);
  for (std::size_t j = 0; j < observed_times.size(); ++j) {
    for (Eigen::Index p = 0; p < observed.rows(); ++p)
      obs_col[static_cast<std::size_t>(p)] = observed(p, static_cast<Eigen::Index>(j));
    std::sort(obs_col.begin(), obs_col.end());
    for (int jq = 0; jq < 3; ++jq) {
      double oq = stats::quantile_sorted(obs_col, levels[jq]);
      double cq = grids_match ? sim_q[jq][j]
                              : interp_at(sim_times, sim_q[jq], observed_times[j]);
      double se = grids_match ? sim_se[jq][j]
                              : interp_at(sim_times, sim_se[jq], observed_times[j]);
      obs_out[jq]->push_back(oq);
      cir_out[jq]->push_back(cq);
      band_out[jq]->push_back(se);
      if (oq > cq + 3.0 * se) rep.flags[j] = 1;
    }
  }
  for (int f : rep.flags) rep.flagged += f;
  rep.flagged_fraction =
      static_cast<double>(rep.flagged) / static_cast<double>(rep.flags.size());
  return rep;
}

std::string process_to_csv(const std::vector<double>& times, const Eigen::MatrixXd& paths) {
  if (paths.cols() != static_cast<Eigen::Index>(times.size()))
    throw std::invalid_argument("process_to_csv: columns must match the time grid");
  std::string out = "time,q50,q90,q99,mean\n";
  std::vector<double> col(static_cast<std::size_t>(paths.rows()));
  for (std::size_t j = 0; j < times.size(); ++j) {
    double sum = 0.0;
    for (Eigen::Index p = 0; p < paths.rows(); ++p) {
      col[static_cast<std::size_t>(p)] = paths(p, static_cast<Eigen::Index>(j));
      sum += col[static_cast<std::size_t>(p)];
    }
    std::sort(col.begin(), col.end());
    out += io::format_double(times[j]);
    out += ',';
    out += io::format_double(stats::quantile_sorted(col, 0.5));
    out += ',';
    out += io::format_double(stats::quantile_sorted(col, 0.9));
    out += ',';
    out += io::format_double(stats::quantile_sorted(col, 0.99));
    out += ',';
    out += io::format_double(sum / static_cast<double>(paths.rows()));
    out += '\n';
  }
  return out;
}

}  // namespace orbit
