#include "gmpd/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "gmpd/classic.hpp"
#include "gmpd/linalg.hpp"

namespace gmpd {

double rmt_F(double x, double z) {
  const double sz = std::sqrt(z);
  const double a = std::sqrt(x * (1.0 + sz) * (1.0 + sz) + 1.0);
  const double b = std::sqrt(x * (1.0 - sz) * (1.0 - sz) + 1.0);
  return (a - b) * (a - b);
}

RmtMse rmt_mmse_mse(Index users, Index antennas, double source_var, double noise_var) {
  if (users < 1 || antennas < 1 || !(source_var > 0.0) || !(noise_var > 0.0)) {
    throw std::invalid_argument("rmt_mmse_mse: arguments must be positive");
  }
  const double k = static_cast<double>(users);
  const double m = static_cast<double>(antennas);
  const double beta = k / m;
  const double g = source_var / noise_var * m;  // snr M
  // 1 - F(g, beta) / (4 beta g), rearranged to avoid subtracting nearly equal terms.
  const double sb = std::sqrt(beta);
  const double a = g * (1.0 + sb) * (1.0 + sb) + 1.0;
  const double b = g * (1.0 - sb) * (1.0 - sb) + 1.0;
  RmtMse r;
  r.exact_f = source_var * 2.0 / (std::sqrt(a * b) + g * (1.0 - beta) + 1.0);
  if (users < antennas) {
    r.asymptotic_branch = noise_var / (m - k);
  } else if (users > antennas) {
    r.asymptotic_branch = (k - m) * source_var / k;
  } else {
    r.asymptotic_branch = std::sqrt(source_var * noise_var / k);
  }
  return r;
}

double gmpid_asymptotic_radius(double beta) { return beta + 2.0 * std::sqrt(beta); }

double sagmpid_asymptotic_radius(double beta) { return 2.0 * std::sqrt(beta) / (1.0 + beta); }

ConvergenceReport gmpid_mean_convergence_report(const SystemInstance& inst) {
  const VarianceFixedPoint fp = variance_fixed_point(inst);
  ConvergenceReport rep = check_proposition1(gmpid_iteration_matrix(inst, fp.gamma));
  rep.beta = inst.dims().beta();
  rep.asymptotic_radius = gmpid_asymptotic_radius(rep.beta);
  return rep;
}

ConvergenceReport sagmpid_convergence_report(const SystemInstance& inst, const RelaxationChoice& relax) {
  const VarianceFixedPoint fp = variance_fixed_point(inst);
  const Matrix a = build_A(inst, fp.gamma);
  Matrix b = -relax.w * a;
  b.diagonal().array() += 1.0;
  ConvergenceReport rep = check_proposition1(b);
  const double lambda_max = relax.lambda_max ? *relax.lambda_max : linalg::extreme_eigenvalues(a).max;
  rep.beta = inst.dims().beta();
  rep.asymptotic_radius = sagmpid_asymptotic_radius(rep.beta);
  rep.predicted_converges = relax.w > 0.0 && relax.w < 2.0 / lambda_max;
  return rep;
}

}  // namespace gmpd
