#include "gmpd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gmpd {

SystemDims::SystemDims(Index k, Index m) : users(k), antennas(m) {
  if (k < 1 || m < 1) {
    throw std::invalid_argument("SystemDims: K and M must be >= 1 (got K=" + std::to_string(k) +
                                ", M=" + std::to_string(m) + ")");
  }
}

SourcePrior::SourcePrior(Vector variances) : variances_(std::move(variances)) {
  if (variances_.size() == 0) throw std::invalid_argument("SourcePrior: empty variance vector");
  for (Index k = 0; k < variances_.size(); ++k) {
    if (!(variances_[k] > 0.0) || !std::isfinite(variances_[k])) {
      throw std::invalid_argument("SourcePrior: variances must be finite and > 0");
    }
  }
}

SourcePrior SourcePrior::homogeneous(Index users, double variance) {
  if (users < 1) throw std::invalid_argument("SourcePrior: users must be >= 1");
  return SourcePrior(Vector::Constant(users, variance));
}

bool SourcePrior::is_homogeneous() const {
  return (variances_.array() == variances_[0]).all();
}

double SourcePrior::common_variance() const {
  if (!is_homogeneous()) throw std::invalid_argument("SourcePrior: prior is not homogeneous");
  return variances_[0];
}

SystemInstance::SystemInstance(Matrix channel, SourcePrior prior, double noise_var)
    : dims_(channel.cols(), channel.rows()),
      channel_(std::move(channel)),
      prior_(std::move(prior)),
      noise_var_(noise_var) {
  if (prior_.size() != dims_.users) {
    throw std::invalid_argument("SystemInstance: prior length must equal the number of channel columns");
  }
  if (!(noise_var_ > 0.0) || !std::isfinite(noise_var_)) {
    throw std::invalid_argument("SystemInstance: noise variance must be finite and > 0");
  }
  if (!channel_.allFinite()) throw std::invalid_argument("SystemInstance: channel has non-finite entries");
}

double SystemInstance::snr() const { return prior_.common_variance() / noise_var_; }

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix64(mix64(parent) ^ (tag * 0xd6e8feb86659fd93ULL + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag_a, std::uint64_t tag_b) {
  return derive_seed(derive_seed(parent, tag_a), tag_b);
}

namespace {

void fill_standard_normal(Eigen::Ref<Matrix> out, std::uint64_t seed) {
  Engine engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Column-major fill; the order is part of the reproducibility contract.
  for (Index j = 0; j < out.cols(); ++j)
    for (Index i = 0; i < out.rows(); ++i) out(i, j) = normal(engine);
}

}  // namespace

Matrix generate_channel(const SystemDims& dims, std::uint64_t seed) {
  Matrix h(dims.antennas, dims.users);
  fill_standard_normal(h, seed);
  return h;
}

Realization realize(const SystemInstance& inst, std::uint64_t seed) {
  Matrix x(inst.users(), 1);
  Matrix n(inst.antennas(), 1);
  fill_standard_normal(x, derive_seed(seed, kSourceStream));
  fill_standard_normal(n, derive_seed(seed, kNoiseStream));
  Vector xs = x.col(0).cwiseProduct(inst.prior().variances().cwiseSqrt());
  Vector ns = n.col(0) * std::sqrt(inst.noise_var());
  return make_realization(inst.channel(), std::move(xs), std::move(ns));
}

Realization make_realization(const Matrix& channel, Vector x, Vector n) {
  if (x.size() != channel.cols() || n.size() != channel.rows()) {
    throw std::invalid_argument("make_realization: dimension mismatch");
  }
  Realization r;
  r.y = channel * x + n;
  r.x = std::move(x);
  r.n = std::move(n);
  return r;
}

double mse(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_hat) {
  if (x.size() != x_hat.size()) {
    throw std::invalid_argument("mse: length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(x_hat.size()) + ")");
  }
  if (x.size() == 0) throw std::invalid_argument("mse: empty vectors");
  return (x - x_hat).squaredNorm() / static_cast<double>(x.size());
}

double noise_var_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace gmpd
