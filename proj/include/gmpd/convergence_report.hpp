#pragma once

#include <optional>

namespace gmpd {

/// (sqrt(2) - 1)^2: the loading below which beta + 2 sqrt(beta) < 1.
inline constexpr double kThresholdBeta = 0.17157287525380990;

/// Diagnostics of an affine iteration x(t) = B x(t-1) + c.
struct ConvergenceReport {
  bool diag_dominant = false;   // I - B strictly row dominant over B's entries
  double spectral_radius = 0.0;
  std::optional<double> asymptotic_radius;
  bool predicted_converges = false;
  double beta = 0.0;            // 0 when the report is not tied to a system
  double threshold_beta = kThresholdBeta;
};

}  // namespace gmpd
