#include "orbit/sampler.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <utility>

#include <Eigen/Dense>

#include "orbit/io.hpp"
#include "orbit/manifold.hpp"

namespace orbit {

ChainState langevin_step(const Potential& pot, double beta, double h, ChainState state,
                         double noise_scale) {
  Eigen::MatrixXd g = pot.gradient_at(state.x);
  Eigen::MatrixXd xi = gaussian_matrix(state.rng, state.x.rows(), state.x.cols());
  state.x += -h * beta * g + std::sqrt(2.0 * h) * noise_scale * xi;
  state.step_index += 1;
  if (!state.x.allFinite())
    throw DivergedChain(state.step_index, std::numeric_limits<double>::quiet_NaN());
  return state;
}

ChainState langevin_step(const Instance& inst, const RunConfig& cfg, ChainState state,
                         double noise_scale) {
  InstancePotential pot(inst);
  state = langevin_step(pot, cfg.beta, cfg.h, std::move(state), noise_scale);
  double norm = state.x.norm();
  if (norm > 1e6 * inst.x_star.norm()) throw DivergedChain(state.step_index, norm);
  return state;
}

Eigen::MatrixXd init_gradient_descent(const Instance& inst, RngStream& rng, double tol,
                                      long long max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("init_gradient_descent: tol must be > 0");
  const int d = inst.dims.d;
  const int k = inst.dims.k;
  const double sigma_max = inst.spectrum.sigma_max();

  OrbitSpec spec1(inst.x_star, 1);
  OrbitSpec spec2(inst.x_star, 2);
  const double accept_radius = tubular_radius(spec1, 2.0);
  auto near_branch = [&](const Eigen::MatrixXd& X) {
    try {
      double e = std::min(eta(spec1, X), eta(spec2, X));
      return e <= accept_radius * accept_radius;
    } catch (const DegenerateProjection&) {
      return false;
    }
  };

  Eigen::MatrixXd X = gaussian_matrix(rng, d, k, 0.01 * sigma_max / std::sqrt(double(d)));
  double fX = loss(inst, X);
  double alpha = 0.25 / (sigma_max * sigma_max + 1.0);
  double grad_norm = std::numeric_limits<double>::infinity();

  for (long long it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd g = gradient(inst, X);
    grad_norm = g.norm();
    if (grad_norm <= tol) {
      if (near_branch(X)) return X;
      // Small gradient far from both branches: saddle region. Perturb and
      // keep descending.
      Eigen::MatrixXd dir = gaussian_matrix(rng, d, k);
      X += (tol / dir.norm()) * dir;
      fX = loss(inst, X);
      continue;
    }
    // Backtracking line search with a weak Armijo condition.
    double a = alpha;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::MatrixXd Xn = X - a * g;
      double fn = loss(inst, Xn);
      if (fn <= fX - 1e-4 * a * grad_norm * grad_norm) {
        X = std::move(Xn);
        fX = fn;
        alpha = std::min(a * 1.5, 1e3);
        moved = true;
        break;
      }
      a *= 0.5;
    }
    if (!moved) {
      // No descent even at a tiny step: numerically stationary.
      if (near_branch(X)) return X;
      Eigen::MatrixXd dir = gaussian_matrix(rng, d, k);
      X += (tol / dir.norm()) * dir;
      fX = loss(inst, X);
    }
  }
  throw InitFailed("gradient descent did not reach tolerance within max_iters", grad_norm);
}

namespace {

struct RecordContext {
  const Instance* inst;
  OrbitSpec home;    // branch nearest the start point
  OrbitSpec other;   // the opposite branch
  bool store_x;
  double h;
};

TrajectoryRecord make_record(const RecordContext& ctx, long long step, const Eigen::MatrixXd& X,
                             std::string* note) {
  TrajectoryRecord r;
  r.step = step;
  r.time = static_cast<double>(step) * ctx.h;
  if (ctx.store_x) {
    r.has_x = true;
    r.x = X;
  }
  r.f_value = loss(*ctx.inst, X);
  try {
    ProjectionResult ph = project_to_orbit(ctx.home, X);
    ProjectionResult po = project_to_orbit(ctx.other, X);
    r.eta = ph.distance * ph.distance;
    r.branch = (ph.distance <= po.distance) ? ctx.home.branch : ctx.other.branch;
    if (ctx.home.k() == 2) {
      r.has_angle = true;
      double a = std::atan2(ph.u(1, 0), ph.u(0, 0));
      if (a < 0.0) a += 2.0 * std::numbers::pi;
      r.angle = a;
    }
    NormalCoordinates c = decompose(ctx.home, X, std::numeric_limits<double>::infinity());
    r.s_norm = c.s.norm();
    r.y_norm = c.y.norm();
  } catch (const DegenerateProjection&) {
    double nan = std::numeric_limits<double>::quiet_NaN();
    r.eta = nan;
    r.branch = 0;
    r.has_angle = (ctx.home.k() == 2);
    r.angle = nan;
    r.s_norm = nan;
    r.y_norm = nan;
    if (note && note->empty()) *note = "degenerate projection at step " + std::to_string(step);
  }
  return r;
}

Trajectory run_one_chain(const Instance& inst, const RunConfig& cfg, const Eigen::MatrixXd& x0,
                         int chain_id, bool store_x) {
  OrbitSpec spec1(inst.x_star, 1);
  OrbitSpec spec2(inst.x_star, 2);
  int home_branch = 1;
  try {
    if (project_to_orbit(spec2, x0).distance < project_to_orbit(spec1, x0).distance)
      home_branch = 2;
  } catch (const DegenerateProjection&) {
    home_branch = 1;
  }

  RecordContext ctx{&inst, home_branch == 1 ? spec1 : spec2,
                    home_branch == 1 ? spec2 : spec1, store_x, cfg.h};

  Trajectory traj;
  traj.chain_id = chain_id;
  traj.home_branch = home_branch;

  const long long burnin = cfg.effective_burnin();
  auto retained = [&](long long i) { return i >= burnin && (i - burnin) % cfg.thin == 0; };

  ChainState state(x0, RngStream(cfg.seed, static_cast<std::uint64_t>(chain_id)));
  try {
    if (retained(0)) traj.records.push_back(make_record(ctx, 0, state.x, &traj.note));
    for (long long i = 1; i <= cfg.steps; ++i) {
      state = langevin_step(inst, cfg, std::move(state));
      if (retained(i)) traj.records.push_back(make_record(ctx, i, state.x, &traj.note));
    }
  } catch (const DivergedChain& e) {
    traj.diverged = true;
    traj.diverged_at_step = e.step;
    traj.note = traj.note.empty() ? e.what() : traj.note + "; " + e.what();
  }
  return traj;
}

}  // namespace

std::vector<Trajectory> run_chains(const Instance& inst, const RunConfig& cfg,
                                   const Eigen::MatrixXd& x0, int threads, bool store_x) {
  cfg.validate();
  if (x0.rows() != inst.dims.d || x0.cols() != inst.dims.k)
    throw std::invalid_argument("run_chains: x0 must be d x k");
  if (!x0.allFinite()) throw std::invalid_argument("run_chains: x0 must be finite");
  if (threads < 1) threads = 1;
  int n = cfg.chains;
  threads = std::min(threads, n);

  std::vector<Trajectory> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));

  auto work = [&](int t) {
    try {
      for (int c = t; c < n; c += threads)
        out[static_cast<std::size_t>(c)] = run_one_chain(inst, cfg, x0, c, store_x);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "step,time,eta,f,branch,angle,s_norm,y_norm\n";
  for (const TrajectoryRecord& r : traj.records) {
    out += std::to_string(r.step);
    out += ',';
    out += io::format_double(r.time);
    out += ',';
    out += io::format_double(r.eta);
    out += ',';
    out += io::format_double(r.f_value);
    out += ',';
    out += std::to_string(r.branch);
    out += ',';
    if (r.has_angle) out += io::format_double(r.angle);
    out += ',';
    out += io::format_double(r.s_norm);
    out += ',';
    out += io::format_double(r.y_norm);
    out += '\n';
  }
  return out;
}

}  // namespace orbit
