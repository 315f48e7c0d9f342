#pragma once

// Exact, non-iterative detectors used as correctness oracles.

#include <stdexcept>

#include "gmpd/detection.hpp"
#include "gmpd/model.hpp"

namespace gmpd {

/// Raised when a factorization meets a (numerically) singular matrix.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MmseBranch { UserSpace, AntennaSpace };

/// Matrix-inversion-lemma form the MMSE detector uses for these dimensions:
/// the K x K system when K <= M, otherwise the M x M one.
MmseBranch mmse_branch(const SystemDims& dims);

/// x_hat = sigma_n^-2 (sigma_n^-2 H^T H + V_x^-1)^-1 H^T y, post_var its diagonal.
DetectionResult mmse_detect(const SystemInstance& inst, const Vector& y);

/// Forces a particular branch; both must agree.
DetectionResult mmse_detect(const SystemInstance& inst, const Vector& y, MmseBranch branch);

/// Per-column correlator x_k = h_k^T y / h_k^T h_k.
DetectionResult matched_filter_detect(const SystemInstance& inst, const Vector& y);

/// Plain zero-forcing estimate (H^T H)^-1 H^T y with no prior (infinite-variance source).
Vector zero_forcing_estimate(const Matrix& channel, const Vector& y);

/// Zero-forcing output combined with the Gaussian source prior through the
/// equality-constraint rule (sum of precisions, precision-weighted means).
DetectionResult inverse_filter_detect(const SystemInstance& inst, const Vector& y);

/// Block Gaussian message passing through the matrix-multiplication node
/// (W_x = H^T W_y H, W_x x~ = H^T W_y y), then combined with the prior.
/// Deliberately independent of mmse_detect: dense W_y, LU solves.
DetectionResult gmp_block_detect(const SystemInstance& inst, const Vector& y);

}  // namespace gmpd
