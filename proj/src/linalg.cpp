#include "gmpd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gmpd::linalg {

namespace {

Vector start_vector(Index n) {
  // Fixed, non-degenerate start so the estimate is reproducible.
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  return v.normalized();
}

/// Rayleigh-quotient power iteration for a symmetric matrix. Returns the
/// signed dominant eigenvalue.
double dominant_symmetric(const Matrix& a, double tol, int max_iter) {
  Vector v = start_vector(a.rows());
  double lambda = v.dot(a * v);
  for (int it = 0; it < max_iter; ++it) {
    Vector w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    // Two-step update copes with +/- lambda pairs of equal magnitude.
    Vector w2 = a * (w / norm);
    const double norm2 = w2.norm();
    if (norm2 == 0.0) return 0.0;
    v = w2 / norm2;
    const double next = v.dot(a * v);
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace

double spectral_radius_power(const Matrix& b, double tol, int max_iter) {
  if (b.rows() != b.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  if (b.rows() == 0) return 0.0;
  Vector v = start_vector(b.rows());
  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = b * v;
    Vector w2 = b * w;
    const double norm2 = w2.norm();
    if (norm2 == 0.0) return 0.0;
    const double next = std::sqrt(norm2);  // ||B^2 v|| with ||v|| = 1
    v = w2 / norm2;
    if (std::abs(next - rho) <= tol * std::max(1.0, next)) return next;
    rho = next;
  }
  return rho;
}

double spectral_radius(const Matrix& b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  if (b.rows() == 0) return 0.0;
  if (b.rows() > kFullEigenLimit) return spectral_radius_power(b);
  if (is_symmetric(b)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::EigenSolver<Matrix> es(b, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool strictly_diagonally_dominant(const Matrix& a) {
  for (Index k = 0; k < a.rows(); ++k) {
    const double diag = std::abs(a(k, k));
    const double off = a.row(k).cwiseAbs().sum() - diag;
    if (!(diag > off)) return false;
  }
  return true;
}

ExtremeEigenvalues extreme_eigenvalues(const Matrix& symmetric) {
  const Index n = symmetric.rows();
  if (n != symmetric.cols() || n == 0) throw std::invalid_argument("extreme_eigenvalues: bad shape");
  if (n <= kFullEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()[0], es.eigenvalues()[n - 1]};
  }
  const double first = dominant_symmetric(symmetric, kPowerTolerance, kPowerMaxIterations);
  Matrix shifted = symmetric;
  shifted.diagonal().array() -= first;
  const double other = first + dominant_symmetric(shifted, kPowerTolerance, kPowerMaxIterations);
  return {std::min(first, other), std::max(first, other)};
}

Matrix gram(const Matrix& h) {
  Matrix g = Matrix::Zero(h.cols(), h.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(h.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

std::uint64_t gram_flops(Index rows, Index cols) {
  // K(K+1)/2 inner products of length M, two flops per term.
  return static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) *
         static_cast<std::uint64_t>(cols + 1);
}

std::uint64_t cholesky_flops(Index n) {
  const auto k = static_cast<std::uint64_t>(n);
  return k * k * k / 3 + k * k;
}

std::uint64_t symmetric_eigen_flops(Index n) {
  // Householder tridiagonalisation (4/3 n^3) plus implicit QR on the tridiagonal.
  const auto k = static_cast<std::uint64_t>(n);
  return 4 * k * k * k / 3 + 30 * k * k;
}

}  // namespace gmpd::linalg
