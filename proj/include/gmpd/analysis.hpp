#pragma once

// Closed-form predictions and convergence diagnostics for the detectors.

#include "gmpd/convergence_report.hpp"
#include "gmpd/gmpid.hpp"
#include "gmpd/sagmpid.hpp"

namespace gmpd {

/// F(x, z) = (sqrt(x (1 + sqrt z)^2 + 1) - sqrt(x (1 - sqrt z)^2 + 1))^2.
double rmt_F(double x, double z);

struct RmtMse {
  double exact_f = 0.0;            // finite-(K, M) value through F
  double asymptotic_branch = 0.0;  // large-system limit for the load regime
};

/// MMSE mean-square error predicted from the limiting singular-value law of H.
RmtMse rmt_mmse_mse(Index users, Index antennas, double source_var, double noise_var);

/// beta + 2 sqrt(beta).
double gmpid_asymptotic_radius(double beta);

/// 2 sqrt(beta) / (1 + beta).
double sagmpid_asymptotic_radius(double beta);

/// Mean-update matrix gamma (H^T H - D) with gamma from the variance fixed point.
ConvergenceReport gmpid_mean_convergence_report(const SystemInstance& inst);

/// rho(I - w A) against the admissibility window 0 < w < 2 / lambda_max(A).
ConvergenceReport sagmpid_convergence_report(const SystemInstance& inst, const RelaxationChoice& relax);

}  // namespace gmpd
