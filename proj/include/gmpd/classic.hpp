#pragma once

// Affine fixed-point iterations x(t) = B x(t-1) + c and their use as solvers
// for the MMSE normal equations.

#include <optional>
#include <string>

#include "gmpd/convergence_report.hpp"
#include "gmpd/detection.hpp"
#include "gmpd/model.hpp"

namespace gmpd {

struct AffineIteration {
  Matrix B;
  Vector c;
  std::string label;
  std::uint64_t setup_flops = 0;  // cost of forming B and c
  /// diag(A) when the iteration solves A x = b; its inverse is reported as the
  /// per-user variance (each user's error with the others known).
  Vector precision_diag;
};

struct IterateResult {
  Vector x;
  IterationTrace trace;
  Termination terminated = Termination::MaxIterations;
  int iterations = 0;
  std::uint64_t flops = 0;  // setup plus iterations
};

/// 1e12 (1 + ||c||_inf).
double divergence_threshold(const AffineIteration& iter);

/// Flops of one x <- B x + c step plus its change norm.
std::uint64_t affine_step_flops(Index n);

IterateResult iterate(const AffineIteration& iter, const Vector& x0, double eps, int max_iter,
                      const TraceProbe& probe = {});

/// Sufficient conditions for convergence of x(t) = B x(t-1) + c.
ConvergenceReport check_proposition1(const Matrix& b);

/// A = H^T H / sigma_n^2 + V_x^-1 and b = H^T y / sigma_n^2, the MMSE normal equations.
struct NormalEquations {
  Matrix A;
  Vector b;
  std::uint64_t flops = 0;
};
NormalEquations mmse_normal_equations(const SystemInstance& inst, const Vector& y);

/// B = -D_A^-1 (A - D_A), c = D_A^-1 b.
AffineIteration jacobi_for_mmse(const SystemInstance& inst, const Vector& y);

/// B = I - omega A, c = omega b; omega defaults to 2 / (lambda_min + lambda_max).
AffineIteration richardson_for_mmse(const SystemInstance& inst, const Vector& y,
                                    std::optional<double> omega = std::nullopt);

/// Detector wrappers starting from x0 = 0.
DetectionResult run_affine_detector(const AffineIteration& iter, double eps, int max_iter,
                                    const TraceProbe& probe = {}, IterationTrace* trace = nullptr);

}  // namespace gmpd
