#include "orbit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "json.hpp"
#include "orbit/io.hpp"

namespace orbit {

std::string variant_name(OperatorVariant v) {
  switch (v) {
    case OperatorVariant::Factorization: return "factorization";
    case OperatorVariant::Sensing: return "sensing";
    case OperatorVariant::Completion: return "completion";
  }
  throw std::logic_error("unknown variant");
}

OperatorVariant variant_from_name(const std::string& name) {
  if (name == "factorization") return OperatorVariant::Factorization;
  if (name == "sensing") return OperatorVariant::Sensing;
  if (name == "completion") return OperatorVariant::Completion;
  throw std::invalid_argument("unknown operator variant: " + name);
}

int MeasurementOperator::output_dim() const {
  switch (variant) {
    case OperatorVariant::Factorization: return d * d;
    case OperatorVariant::Sensing: return static_cast<int>(sensing_mats.size());
    case OperatorVariant::Completion: return static_cast<int>(mask.size());
  }
  throw std::logic_error("unknown variant");
}

Eigen::VectorXd apply_operator(const MeasurementOperator& op, const Eigen::MatrixXd& M) {
  if (M.rows() != op.d || M.cols() != op.d)
    throw std::invalid_argument("apply_operator: M must be d x d");
  switch (op.variant) {
    case OperatorVariant::Factorization:
      // Column-major vectorization.
      return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
    case OperatorVariant::Sensing: {
      Eigen::VectorXd out(op.sensing_mats.size());
      for (std::size_t i = 0; i < op.sensing_mats.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = op.sensing_mats[i].cwiseProduct(M).sum();
      return out;
    }
    case OperatorVariant::Completion: {
      Eigen::VectorXd out(op.mask.size());
      for (std::size_t i = 0; i < op.mask.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = M(op.mask[i].i, op.mask[i].j);
      return out;
    }
  }
  throw std::logic_error("unknown variant");
}

Eigen::MatrixXd adjoint_operator(const MeasurementOperator& op, const Eigen::VectorXd& v) {
  if (v.size() != op.output_dim())
    throw std::invalid_argument("adjoint_operator: wrong vector length");
  switch (op.variant) {
    case OperatorVariant::Factorization:
      return Eigen::Map<const Eigen::MatrixXd>(v.data(), op.d, op.d);
    case OperatorVariant::Sensing: {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(op.d, op.d);
      for (std::size_t i = 0; i < op.sensing_mats.size(); ++i)
        out += v(static_cast<Eigen::Index>(i)) * op.sensing_mats[i];
      return out;
    }
    case OperatorVariant::Completion: {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(op.d, op.d);
      for (std::size_t i = 0; i < op.mask.size(); ++i)
        out(op.mask[i].i, op.mask[i].j) += v(static_cast<Eigen::Index>(i));
      return out;
    }
  }
  throw std::logic_error("unknown variant");
}

double loss(const Instance& inst, const Eigen::MatrixXd& X) {
  if (X.rows() != inst.dims.d || X.cols() != inst.dims.k)
    throw std::invalid_argument("loss: X must be d x k");
  Eigen::MatrixXd M = X * X.transpose();
  return (apply_operator(inst.op, M) - inst.b).squaredNorm();
}

Eigen::MatrixXd gradient(const Instance& inst, const Eigen::MatrixXd& X) {
  if (X.rows() != inst.dims.d || X.cols() != inst.dims.k)
    throw std::invalid_argument("gradient: X must be d x k");
  Eigen::MatrixXd M = X * X.transpose();
  Eigen::VectorXd r = apply_operator(inst.op, M) - inst.b;
  Eigen::MatrixXd G = adjoint_operator(inst.op, r);
  return 2.0 * (G + G.transpose()) * X;
}

Eigen::MatrixXd haar_frame(RngStream& rng, int d, int k) {
  Eigen::MatrixXd Z = gaussian_matrix(rng, d, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  // Fix the sign ambiguity so the distribution is Haar and the output is a
  // pure function of the stream position.
  for (int j = 0; j < k; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

double incoherence(const Eigen::MatrixXd& x_star) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x_star, Eigen::ComputeThinU);
  const Eigen::MatrixXd& U = svd.matrixU();
  double max_row = 0.0;
  for (Eigen::Index i = 0; i < U.rows(); ++i)
    max_row = std::max(max_row, U.row(i).squaredNorm());
  return (static_cast<double>(x_star.rows()) / static_cast<double>(x_star.cols())) * max_row;
}

namespace {

// Completion mask draw; the salt lets generate_instance retry an empty mask
// deterministically.
std::vector<MaskEntry> draw_mask(std::uint64_t seed, int d, double p, std::uint64_t salt) {
  RngStream rng(seed, kStreamOperator + salt);
  std::vector<MaskEntry> mask;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (rng.next_uniform() < p) mask.push_back({i, j});
  return mask;
}

std::vector<Eigen::MatrixXd> draw_sensing(std::uint64_t seed, int d, int L) {
  RngStream rng(seed, kStreamOperator);
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(static_cast<std::size_t>(L));
  double stddev = 1.0 / std::sqrt(static_cast<double>(L));
  for (int i = 0; i < L; ++i) mats.push_back(gaussian_matrix(rng, d, d, stddev));
  return mats;
}

}  // namespace

Instance generate_instance(const Dims& dims, const SpectrumSpec& spectrum,
                           OperatorVariant variant, const GenerateOptions& opts,
                           double beta, std::uint64_t seed) {
  dims.validate();
  spectrum.validate();
  if (static_cast<int>(spectrum.values.size()) != dims.k)
    throw std::invalid_argument("generate_instance: spectrum must have k entries");
  if (!(beta > 0.0)) throw std::invalid_argument("generate_instance: beta must be > 0");

  Instance inst;
  inst.dims = dims;
  inst.spectrum = spectrum;
  inst.beta = beta;
  inst.seed = seed;

  // Planted factor X* = U diag(sigma) V^T.
  RngStream xs(seed, kStreamXStar);
  Eigen::MatrixXd U = haar_frame(xs, dims.d, dims.k);
  Eigen::MatrixXd V = haar_frame(xs, dims.k, dims.k);
  Eigen::VectorXd sv = Eigen::Map<const Eigen::VectorXd>(
      spectrum.values.data(), static_cast<Eigen::Index>(spectrum.values.size()));
  inst.x_star = U * sv.asDiagonal() * V.transpose();
  inst.incoherence_mu = incoherence(inst.x_star);

  inst.op.variant = variant;
  inst.op.d = dims.d;
  switch (variant) {
    case OperatorVariant::Factorization:
      break;
    case OperatorVariant::Sensing:
      if (opts.L < 1) throw std::invalid_argument("generate_instance: sensing needs L >= 1");
      inst.op.sensing_mats = draw_sensing(seed, dims.d, opts.L);
      break;
    case OperatorVariant::Completion: {
      if (!(opts.p > 0.0 && opts.p <= 1.0))
        throw std::invalid_argument("generate_instance: completion needs p in (0,1]");
      inst.op.p = opts.p;
      std::uint64_t salt = 0;
      inst.op.mask = draw_mask(seed, dims.d, opts.p, salt);
      while (inst.op.mask.empty() && opts.regenerate_empty_mask && salt < 16) {
        ++salt;
        inst.op.mask = draw_mask(seed, dims.d, opts.p, salt);
      }
      if (inst.op.mask.empty())
        throw std::runtime_error("generate_instance: completion mask is empty");
      break;
    }
  }

  RngStream noise(seed, kStreamNoise);
  Eigen::MatrixXd Mstar = inst.x_star * inst.x_star.transpose();
  Eigen::VectorXd clean = apply_operator(inst.op, Mstar);
  Eigen::VectorXd n = gaussian_matrix(noise, clean.size(), 1, 1.0 / std::sqrt(beta));
  inst.b = clean + n;
  return inst;
}

std::string instance_to_json(const Instance& inst) {
  io::JsonWriter w;
  w.begin_object();
  w.key("dims").begin_object();
  w.key("d").value(inst.dims.d);
  w.key("k").value(inst.dims.k);
  w.end_object();
  w.key("spectrum").value(inst.spectrum.values);
  w.key("variant").value(variant_name(inst.op.variant));
  w.key("variant_params").begin_object();
  if (inst.op.variant == OperatorVariant::Sensing) {
    w.key("L").value(static_cast<long long>(inst.op.sensing_mats.size()));
  } else if (inst.op.variant == OperatorVariant::Completion) {
    w.key("p").value(inst.op.p);
    w.key("mask").begin_array();
    for (const MaskEntry& e : inst.op.mask) {
      w.begin_array();
      w.value(e.i);
      w.value(e.j);
      w.end_array();
    }
    w.end_array();
  }
  w.end_object();
  // Row-major listing of X*.
  w.key("x_star").begin_array();
  for (Eigen::Index i = 0; i < inst.x_star.rows(); ++i)
    for (Eigen::Index j = 0; j < inst.x_star.cols(); ++j) w.value(inst.x_star(i, j));
  w.end_array();
  w.key("b").begin_array();
  for (Eigen::Index i = 0; i < inst.b.size(); ++i) w.value(inst.b(i));
  w.end_array();
  w.key("beta").value(inst.beta);
  w.key("seed").value(static_cast<unsigned long long>(inst.seed));
  w.key("incoherence_mu").value(inst.incoherence_mu);
  w.end_object();
  return w.str() + "\n";
}

Instance instance_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  Instance inst;
  inst.dims = Dims(j.at("dims").at("d").get<int>(), j.at("dims").at("k").get<int>());
  inst.spectrum = SpectrumSpec(j.at("spectrum").get<std::vector<double>>());
  inst.beta = j.at("beta").get<double>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  inst.incoherence_mu = j.at("incoherence_mu").get<double>();

  inst.op.variant = variant_from_name(j.at("variant").get<std::string>());
  inst.op.d = inst.dims.d;
  const auto& vp = j.at("variant_params");
  if (inst.op.variant == OperatorVariant::Sensing) {
    int L = vp.at("L").get<int>();
    if (L < 1) throw std::invalid_argument("instance JSON: sensing L must be >= 1");
    inst.op.sensing_mats = draw_sensing(inst.seed, inst.dims.d, L);
  } else if (inst.op.variant == OperatorVariant::Completion) {
    inst.op.p = vp.at("p").get<double>();
    for (const auto& pair : vp.at("mask")) {
      MaskEntry e{pair.at(0).get<int>(), pair.at(1).get<int>()};
      if (e.i < 0 || e.i >= inst.dims.d || e.j < 0 || e.j >= inst.dims.d)
        throw std::invalid_argument("instance JSON: mask index out of range");
      inst.op.mask.push_back(e);
    }
  }

  auto xs = j.at("x_star").get<std::vector<double>>();
  if (static_cast<int>(xs.size()) != inst.dims.ambient())
    throw std::invalid_argument("instance JSON: x_star has wrong length");
  inst.x_star.resize(inst.dims.d, inst.dims.k);
  for (int i = 0; i < inst.dims.d; ++i)
    for (int jj = 0; jj < inst.dims.k; ++jj)
      inst.x_star(i, jj) = xs[static_cast<std::size_t>(i * inst.dims.k + jj)];

  auto bv = j.at("b").get<std::vector<double>>();
  if (static_cast<int>(bv.size()) != inst.op.output_dim())
    throw std::invalid_argument("instance JSON: b has wrong length");
  inst.b = Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size()));
  return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
  io::write_file(path, instance_to_json(inst));
}

Instance load_instance(const std::string& path) {
  return instance_from_json(io::read_file(path));
}

}  // namespace orbit
