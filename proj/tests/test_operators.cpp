#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbit/operators.hpp"
#include "orbit/rng.hpp"
#include "orbit/stats.hpp"
#include "orbit/types.hpp"

using namespace orbit;

namespace {

Instance make_sensing(int d, int k, int L, double beta, std::uint64_t seed) {
  GenerateOptions opts;
  opts.L = L;
  std::vector<double> values(k);
  for (int i = 0; i < k; ++i)
    values[i] = k == 1 ? 2.0 : 2.0 - static_cast<double>(i) / (k - 1);
  return generate_instance(Dims(d, k), SpectrumSpec(values), OperatorVariant::Sensing,
                           opts, beta, seed);
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (auto v : {OperatorVariant::Factorization, OperatorVariant::Sensing,
                 OperatorVariant::Completion}) {
    CHECK(variant_from_name(variant_name(v)) == v);
  }
  CHECK_THROWS_AS(variant_from_name("nonsense"), std::invalid_argument);
}

TEST_CASE("factorization operator is column-major vec") {
  MeasurementOperator op;
  op.variant = OperatorVariant::Factorization;
  op.d = 2;
  CHECK(op.output_dim() == 4);
  Eigen::MatrixXd M(2, 2);
  M << 1.0, 3.0, 2.0, 4.0;  // columns (1,2) and (3,4)
  Eigen::VectorXd v = apply_operator(op, M);
  REQUIRE(v.size() == 4);
  CHECK(v(0) == 1.0);
  CHECK(v(1) == 2.0);
  CHECK(v(2) == 3.0);
  CHECK(v(3) == 4.0);
  // vec of the identity.
  Eigen::VectorXd vi = apply_operator(op, Eigen::MatrixXd::Identity(2, 2));
  CHECK(vi(0) == 1.0);
  CHECK(vi(1) == 0.0);
  CHECK(vi(2) == 0.0);
  CHECK(vi(3) == 1.0);
  // The adjoint of vec is unvec.
  Eigen::MatrixXd back = adjoint_operator(op, v);
  CHECK((back - M).norm() == 0.0);
}

TEST_CASE("completion operator gathers masked entries in row-major order") {
  MeasurementOperator op;
  op.variant = OperatorVariant::Completion;
  op.d = 3;
  op.mask = {{0, 1}, {1, 0}, {2, 2}};
  op.p = 0.3;
  CHECK(op.output_dim() == 3);
  Eigen::MatrixXd M(3, 3);
  M << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Eigen::VectorXd v = apply_operator(op, M);
  CHECK(v(0) == 2.0);
  CHECK(v(1) == 4.0);
  CHECK(v(2) == 9.0);
  Eigen::MatrixXd back = adjoint_operator(op, Eigen::VectorXd::Ones(3));
  CHECK(back.sum() == 3.0);
  CHECK(back(0, 1) == 1.0);
  CHECK(back(1, 0) == 1.0);
  CHECK(back(2, 2) == 1.0);
  CHECK(back(0, 0) == 0.0);
}

TEST_CASE("adjoint identity <A(M), v> == <M, A*(v)> for every variant") {
  RngStream rng(404, 0);
  const int d = 5;

  std::vector<MeasurementOperator> ops;
  MeasurementOperator fact;
  fact.variant = OperatorVariant::Factorization;
  fact.d = d;
  ops.push_back(fact);

  Instance sens = make_sensing(d, 2, 17, 1.0, 11);
  ops.push_back(sens.op);

  GenerateOptions copts;
  copts.p = 0.5;
  Instance comp = generate_instance(Dims(d, 2), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Completion, copts, 1.0, 12);
  ops.push_back(comp.op);

  for (const auto& op : ops) {
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd M = gaussian_matrix(rng, d, d);
      Eigen::VectorXd v = gaussian_matrix(rng, op.output_dim(), 1);
      double lhs = apply_operator(op, M).dot(v);
      double rhs = (M.array() * adjoint_operator(op, v).array()).sum();
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("scalar instance: loss 9 and gradient 24 at X = 2") {
  Instance inst;
  inst.dims = Dims(1, 1);
  inst.spectrum = SpectrumSpec{{1.0}};
  inst.op.variant = OperatorVariant::Factorization;
  inst.op.d = 1;
  inst.x_star = Eigen::MatrixXd::Ones(1, 1);
  inst.b = Eigen::VectorXd::Ones(1);
  inst.beta = 1.0;

  Eigen::MatrixXd X = 2.0 * Eigen::MatrixXd::Ones(1, 1);
  CHECK(loss(inst, X) == doctest::Approx(9.0));
  Eigen::MatrixXd g = gradient(inst, X);
  CHECK(g(0, 0) == doctest::Approx(24.0));
  // At the planted point the residual and gradient both vanish.
  CHECK(loss(inst, inst.x_star) == doctest::Approx(0.0));
  CHECK(gradient(inst, inst.x_star).norm() == doctest::Approx(0.0));
}

TEST_CASE("gradient matches central finite differences of the loss") {
  const int d = 5, k = 2;
  std::vector<Instance> insts;
  GenerateOptions none;
  insts.push_back(generate_instance(Dims(d, k), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Factorization, none, 50.0, 3));
  insts.push_back(make_sensing(d, k, 40, 50.0, 4));
  GenerateOptions copts;
  copts.p = 0.6;
  insts.push_back(generate_instance(Dims(d, k), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Completion, copts, 50.0, 5));

  RngStream rng(999, 0);
  for (const auto& inst : insts) {
    Eigen::MatrixXd X = inst.x_star + 0.3 * gaussian_matrix(rng, d, k);
    Eigen::MatrixXd g = gradient(inst, X);
    const double delta = 1e-5;
    double scale = std::max(1.0, g.norm());
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < d; ++i) {
        Eigen::MatrixXd Xp = X, Xm = X;
        Xp(i, j) += delta;
        Xm(i, j) -= delta;
        double fd = (loss(inst, Xp) - loss(inst, Xm)) / (2.0 * delta);
        CHECK(std::abs(fd - g(i, j)) / scale < 1e-6);
      }
    }
  }
}

TEST_CASE("noiseless instances are exact at the planted factor") {
  for (int variant = 0; variant < 3; ++variant) {
    GenerateOptions opts;
    OperatorVariant v = OperatorVariant::Factorization;
    if (variant == 1) {
      v = OperatorVariant::Sensing;
      opts.L = 60;
    } else if (variant == 2) {
      v = OperatorVariant::Completion;
      opts.p = 0.7;
    }
    Instance inst = generate_instance(Dims(6, 2), SpectrumSpec{{3.0, 1.5}}, v, opts, 100.0, 21);
    // Strip the measurement noise by recomputing b from the planted factor.
    inst.b = apply_operator(inst.op, inst.x_star * inst.x_star.transpose());
    CHECK(loss(inst, inst.x_star) < 1e-20);
    CHECK(gradient(inst, inst.x_star).norm() < 1e-10);
    // X X^T, and so the loss, is invariant under right rotations of X.
    double theta = 0.7;
    Eigen::Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    CHECK(loss(inst, inst.x_star * R) < 1e-18);
  }
}

TEST_CASE("generated noise has variance 1/beta") {
  const double beta = 4.0;
  GenerateOptions none;
  Instance inst = generate_instance(Dims(20, 1), SpectrumSpec{{1.0}},
                                    OperatorVariant::Factorization, none, beta, 77);
  Eigen::VectorXd clean = apply_operator(inst.op, inst.x_star * inst.x_star.transpose());
  Eigen::VectorXd noise = inst.b - clean;
  REQUIRE(noise.size() == 400);
  std::vector<double> nv(noise.data(), noise.data() + noise.size());
  CHECK(std::abs(stats::mean(nv)) < 0.1);
  CHECK(stats::variance(nv) == doctest::Approx(1.0 / beta).epsilon(0.35));
}

TEST_CASE("sensing operator is nearly norm-preserving at L = 400") {
  // Each ratio |A(M)|^2 / |M|_F^2 is chi^2_L / L with std sqrt(2/L) ~ 0.07;
  // the mean over 30 independent operators concentrates near 1.
  const int d = 8, L = 400;
  RngStream mrng(2718, 0);
  double sum_ratio = 0.0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    Instance inst = make_sensing(d, 2, L, 1e6, 1000 + t);
    Eigen::MatrixXd Z = gaussian_matrix(mrng, d, d);
    Eigen::MatrixXd M = Z + Z.transpose();
    double ratio = apply_operator(inst.op, M).squaredNorm() / M.squaredNorm();
    CHECK(ratio > 2.0 / 3.0);
    CHECK(ratio < 4.0 / 3.0);
    sum_ratio += ratio;
  }
  double mean_ratio = sum_ratio / trials;
  CHECK(mean_ratio > 0.95);
  CHECK(mean_ratio < 1.05);
  // Sensing matrices have entry variance 1/L.
  Instance inst = make_sensing(d, 2, L, 1e6, 5);
  double ssq = 0.0;
  for (const auto& A : inst.op.sensing_mats) ssq += A.squaredNorm();
  double entry_var = ssq / (static_cast<double>(L) * d * d);
  CHECK(entry_var == doctest::Approx(1.0 / L).epsilon(0.1));
}

TEST_CASE("completion masks are sorted row-major and Bernoulli(p)") {
  GenerateOptions opts;
  opts.p = 0.4;
  Instance inst = generate_instance(Dims(30, 2), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Completion, opts, 10.0, 9);
  REQUIRE(!inst.op.mask.empty());
  CHECK(inst.op.p == 0.4);
  for (std::size_t t = 1; t < inst.op.mask.size(); ++t) {
    const auto& a = inst.op.mask[t - 1];
    const auto& b = inst.op.mask[t];
    bool ordered = (a.i < b.i) || (a.i == b.i && a.j < b.j);
    CHECK(ordered);
  }
  // Observed fraction of 900 cells is near p.
  double frac = static_cast<double>(inst.op.mask.size()) / 900.0;
  CHECK(std::abs(frac - 0.4) < 0.07);  // ~4.3 binomial standard errors
  // Regeneration from the same seed is identical.
  Instance again = generate_instance(Dims(30, 2), SpectrumSpec{{2.0, 1.0}},
                                     OperatorVariant::Completion, opts, 10.0, 9);
  CHECK(again.op.mask == inst.op.mask);
}

TEST_CASE("empty completion masks: error without retry, salted retry succeeds") {
  GenerateOptions strict;
  strict.p = 0.2;
  strict.regenerate_empty_mask = false;
  const Dims dims(2, 1);
  const SpectrumSpec spec{{1.0}};
  // With 4 cells at p = 0.2 an empty first draw happens for ~41% of seeds;
  // scan for one deterministically.
  long empty_seed = -1;
  for (long s = 0; s < 100 && empty_seed < 0; ++s) {
    try {
      generate_instance(dims, spec, OperatorVariant::Completion, strict, 1.0, s);
    } catch (const std::runtime_error&) {
      empty_seed = s;
    }
  }
  REQUIRE(empty_seed >= 0);
  GenerateOptions retry = strict;
  retry.regenerate_empty_mask = true;
  Instance inst = generate_instance(dims, spec, OperatorVariant::Completion, retry, 1.0,
                                    static_cast<std::uint64_t>(empty_seed));
  CHECK(!inst.op.mask.empty());
}

TEST_CASE("instance generation is a pure function of the seed") {
  GenerateOptions opts;
  opts.L = 25;
  Instance a = make_sensing(6, 2, 25, 8.0, 31415);
  Instance b = make_sensing(6, 2, 25, 8.0, 31415);
  CHECK((a.x_star - b.x_star).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.b - b.b).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 25; ++i)
    CHECK((a.op.sensing_mats[i] - b.op.sensing_mats[i]).cwiseAbs().maxCoeff() == 0.0);

  Instance c = make_sensing(6, 2, 25, 8.0, 31416);
  CHECK((a.x_star - c.x_star).cwiseAbs().maxCoeff() > 0.0);

  // The planted factor carries the requested spectrum.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.x_star);
  CHECK(svd.singularValues()(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(svd.singularValues()(1) == doctest::Approx(1.0).epsilon(1e-12));
  // And the stored incoherence matches a recomputation.
  CHECK(a.incoherence_mu == doctest::Approx(incoherence(a.x_star)).epsilon(1e-12));
}

TEST_CASE("loss at the planted factor stays near the noise floor") {
  // E f(X*) = E |noise|^2 = output_dim / beta = d^2 / beta.
  const double beta = 100.0;
  GenerateOptions none;
  Instance inst = generate_instance(Dims(4, 2), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Factorization, none, beta, 6);
  double f = loss(inst, inst.x_star);
  CHECK(f < 10.0 * 16.0 / beta);
  CHECK(f > 0.0);
}

TEST_CASE("haar_frame gives orthonormal columns deterministically") {
  RngStream r1(88, 0), r2(88, 0);
  Eigen::MatrixXd Q1 = haar_frame(r1, 7, 3);
  Eigen::MatrixXd Q2 = haar_frame(r2, 7, 3);
  CHECK((Q1 - Q2).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXd G = Q1.transpose() * Q1;
  CHECK((G - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

  // Incoherence is bounded by 1 <= mu <= d/k and equals d/k for a spike.
  Eigen::MatrixXd spike = Eigen::MatrixXd::Zero(6, 2);
  spike(0, 0) = 2.0;
  spike(1, 1) = 1.0;
  CHECK(incoherence(spike) == doctest::Approx(3.0));
  double mu = incoherence(Q1);
  CHECK(mu >= 1.0 - 1e-12);
  CHECK(mu <= 7.0 / 3.0 + 1e-12);
}

TEST_CASE("instance JSON round-trips byte-for-byte") {
  std::vector<Instance> insts;
  GenerateOptions none;
  insts.push_back(generate_instance(Dims(4, 2), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Factorization, none, 7.5, 101));
  insts.push_back(make_sensing(4, 2, 13, 7.5, 102));
  GenerateOptions copts;
  copts.p = 0.5;
  insts.push_back(generate_instance(Dims(4, 2), SpectrumSpec{{2.0, 1.0}},
                                    OperatorVariant::Completion, copts, 7.5, 103));

  for (const auto& inst : insts) {
    std::string text = instance_to_json(inst);
    Instance back = instance_from_json(text);
    CHECK(instance_to_json(back) == text);
    CHECK(back.beta == inst.beta);
    CHECK(back.seed == inst.seed);
    CHECK(back.dims.d == inst.dims.d);
    CHECK(back.dims.k == inst.dims.k);
    CHECK((back.x_star - inst.x_star).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.b - inst.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.op.variant == inst.op.variant);
    if (inst.op.variant == OperatorVariant::Sensing) {
      REQUIRE(back.op.sensing_mats.size() == inst.op.sensing_mats.size());
      for (std::size_t i = 0; i < inst.op.sensing_mats.size(); ++i)
        CHECK((back.op.sensing_mats[i] - inst.op.sensing_mats[i]).cwiseAbs().maxCoeff() == 0.0);
    }
    if (inst.op.variant == OperatorVariant::Completion) {
      CHECK(back.op.mask == inst.op.mask);
      CHECK(back.op.p == inst.op.p);
    }
  }
}

TEST_CASE("instance save/load and malformed input") {
  auto path = (std::filesystem::temp_directory_path() / "orbit_test_instance.json").string();
  Instance inst = make_sensing(3, 1, 9, 2.0, 55);
  save_instance(inst, path);
  Instance back = load_instance(path);
  CHECK(instance_to_json(back) == instance_to_json(inst));
  std::filesystem::remove(path);

  CHECK_THROWS(instance_from_json("not json at all"));
  CHECK_THROWS(instance_from_json("{}"));
  CHECK_THROWS(load_instance("/nonexistent/dir/missing.json"));
}
