#pragma once

// Real-valued uplink MU-MIMO system model: y = Hx + n, with K single-antenna
// Gaussian users and an M-antenna receiver.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace gmpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct SystemDims {
  Index users = 1;     // K
  Index antennas = 1;  // M

  SystemDims() = default;
  SystemDims(Index k, Index m);

  double beta() const { return static_cast<double>(users) / static_cast<double>(antennas); }
  friend bool operator==(const SystemDims&, const SystemDims&) = default;
};

/// Zero-mean Gaussian source prior with per-user variances.
class SourcePrior {
 public:
  explicit SourcePrior(Vector variances);
  static SourcePrior homogeneous(Index users, double variance);

  const Vector& variances() const { return variances_; }
  double variance(Index k) const { return variances_[k]; }
  Index size() const { return variances_.size(); }
  bool is_homogeneous() const;
  /// Common variance; throws if the prior is heterogeneous.
  double common_variance() const;

 private:
  Vector variances_;
};

/// One detection problem: channel, prior and noise level. Immutable.
class SystemInstance {
 public:
  SystemInstance(Matrix channel, SourcePrior prior, double noise_var);

  const SystemDims& dims() const { return dims_; }
  Index users() const { return dims_.users; }
  Index antennas() const { return dims_.antennas; }
  const Matrix& channel() const { return channel_; }
  const SourcePrior& prior() const { return prior_; }
  double noise_var() const { return noise_var_; }
  /// sigma_x^2 / sigma_n^2; requires a homogeneous prior.
  double snr() const;

 private:
  SystemDims dims_;
  Matrix channel_;
  SourcePrior prior_;
  double noise_var_;
};

struct Realization {
  Vector x;  // transmitted sources
  Vector n;  // noise
  Vector y;  // received
};

// --- seeding ---------------------------------------------------------------

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z);

/// Deterministic child seed from a parent seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag_a, std::uint64_t tag_b);

using Engine = std::mt19937_64;

// Stream tags used when one trial seed feeds several generators.
inline constexpr std::uint64_t kChannelStream = 0x43484e;  // "CHN"
inline constexpr std::uint64_t kSourceStream = 0x535243;   // "SRC"
inline constexpr std::uint64_t kNoiseStream = 0x4e4f49;    // "NOI"

// --- generation ------------------------------------------------------------

/// M x K matrix of i.i.d. N(0,1) entries, a pure function of (dims, seed).
Matrix generate_channel(const SystemDims& dims, std::uint64_t seed);

/// Draws x from the prior and n ~ N(0, noise_var I), then forms y = Hx + n.
Realization realize(const SystemInstance& inst, std::uint64_t seed);

/// Builds a realization from injected x and n.
Realization make_realization(const Matrix& channel, Vector x, Vector n);

/// Per-trial sample MSE (1/K) * sum_k (x_k - xhat_k)^2.
double mse(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_hat);

/// sigma_n^2 for a dB SNR with unit source power.
double noise_var_from_snr_db(double snr_db);

}  // namespace gmpd
