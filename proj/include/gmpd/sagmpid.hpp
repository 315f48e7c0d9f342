#pragma once

// Scale-and-add message passing: means run on sqrt(w) H and sqrt(w) y with a
// (w - 1) memory term, variances exactly as in plain message passing.

#include <optional>
#include <string_view>

#include "gmpd/gmpid.hpp"

namespace gmpd {

enum class RelaxationMode {
  AsymptoticBeta,   // w = 1 / (1 + beta)
  ExactEigen,       // w = 2 / (lambda_min + lambda_max) of A
  GershgorinBound,  // w = 2 / min(max row sum, max column sum) of |A|
  Manual,
};

std::string_view to_string(RelaxationMode mode);

struct RelaxationChoice {
  RelaxationMode mode = RelaxationMode::AsymptoticBeta;
  double w = 1.0;
  std::optional<double> lambda_min;
  std::optional<double> lambda_max;
  /// 0 < w < 2 / lambda_max, when lambda_max is known.
  std::optional<bool> admissible;
  std::uint64_t setup_flops = 0;
};

/// A = gamma (H^T H - D) + I with the exact diagonal D = diag(h_k^T h_k).
Matrix build_A(const SystemInstance& inst, double gamma);

/// Relaxation for a mode. manual_w is required for Manual and must be positive.
RelaxationChoice choose_w(const SystemInstance& inst, double gamma, RelaxationMode mode,
                          std::optional<double> manual_w = std::nullopt);

/// Default selection: ExactEigen up to K = 2000 when A is positive definite,
/// otherwise GershgorinBound.
RelaxationChoice choose_w_auto(const SystemInstance& inst, double gamma);

/// I - w A, the mean-error propagation matrix once variances have settled.
Matrix sagmpid_iteration_matrix(const SystemInstance& inst, double gamma, double w);

GmpidOutput sagmpid_detect(const SystemInstance& inst, const Vector& y, const RelaxationChoice& relax,
                           const GmpidOptions& options = {});

}  // namespace gmpd
