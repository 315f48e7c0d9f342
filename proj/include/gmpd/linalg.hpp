#pragma once

// Dense helpers shared by the classical, analysis and relaxation modules.

#include <cstdint>

#include "gmpd/model.hpp"

namespace gmpd::linalg {

/// Above this size the spectral radius is estimated by power iteration.
inline constexpr Index kFullEigenLimit = 2000;
inline constexpr double kPowerTolerance = 1e-6;
inline constexpr int kPowerMaxIterations = 10000;

/// rho(B): full eigendecomposition for K <= kFullEigenLimit, power iteration above.
double spectral_radius(const Matrix& b);

/// Dominant |eigenvalue| by power iteration, independent of matrix size.
double spectral_radius_power(const Matrix& b, double tol = kPowerTolerance,
                             int max_iter = kPowerMaxIterations);

bool is_symmetric(const Matrix& a, double rel_tol = 1e-13);

/// Strict row diagonal dominance: |a_kk| > sum_{j != k} |a_kj| for every k.
bool strictly_diagonally_dominant(const Matrix& a);

struct ExtremeEigenvalues {
  double min = 0.0;
  double max = 0.0;
};

/// Smallest and largest eigenvalue of a symmetric matrix.
ExtremeEigenvalues extreme_eigenvalues(const Matrix& symmetric);

/// H^T H, computed from the lower triangle only.
Matrix gram(const Matrix& h);

// Leading-order flop models for the dense kernels above.
std::uint64_t gram_flops(Index rows, Index cols);
std::uint64_t cholesky_flops(Index n);
std::uint64_t symmetric_eigen_flops(Index n);

}  // namespace gmpd::linalg
