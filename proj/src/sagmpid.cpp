#include "gmpd/sagmpid.hpp"

#include <stdexcept>

#include "gmpd/linalg.hpp"

namespace gmpd {

std::string_view to_string(RelaxationMode mode) {
  switch (mode) {
    case RelaxationMode::AsymptoticBeta: return "beta";
    case RelaxationMode::ExactEigen: return "eigen";
    case RelaxationMode::GershgorinBound: return "bound";
    case RelaxationMode::Manual: return "manual";
  }
  return "unknown";
}

Matrix build_A(const SystemInstance& inst, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("build_A: gamma must be positive");
  Matrix a = gmpid_iteration_matrix(inst, gamma);
  a.diagonal().setOnes();
  return a;
}

namespace {

std::uint64_t build_A_flops(const SystemInstance& inst) {
  const auto k = static_cast<std::uint64_t>(inst.users());
  return linalg::gram_flops(inst.antennas(), inst.users()) + k * k;
}

void set_admissibility(RelaxationChoice& c) {
  if (c.lambda_max) c.admissible = c.w > 0.0 && c.w < 2.0 / *c.lambda_max;
}

}  // namespace

RelaxationChoice choose_w(const SystemInstance& inst, double gamma, RelaxationMode mode,
                          std::optional<double> manual_w) {
  RelaxationChoice c;
  c.mode = mode;
  switch (mode) {
    case RelaxationMode::AsymptoticBeta: {
      const double beta = inst.dims().beta();
      if (!(beta < 1.0)) throw std::invalid_argument("choose_w: asymptotic mode needs K < M");
      c.w = 1.0 / (1.0 + beta);
      return c;
    }
    case RelaxationMode::ExactEigen: {
      const Matrix a = build_A(inst, gamma);
      const auto ev = linalg::extreme_eigenvalues(a);
      c.lambda_min = ev.min;
      c.lambda_max = ev.max;
      c.w = 2.0 / (ev.min + ev.max);
      c.setup_flops = build_A_flops(inst) + linalg::symmetric_eigen_flops(inst.users());
      set_admissibility(c);
      return c;
    }
    case RelaxationMode::GershgorinBound: {
      const Matrix a = build_A(inst, gamma).cwiseAbs();
      const double bound = std::min(a.rowwise().sum().maxCoeff(), a.colwise().sum().maxCoeff());
      c.w = 2.0 / bound;
      const auto k = static_cast<std::uint64_t>(inst.users());
      c.setup_flops = build_A_flops(inst) + 2 * k * k;
      return c;
    }
    case RelaxationMode::Manual: {
      if (!manual_w || !(*manual_w > 0.0)) throw std::invalid_argument("choose_w: manual w must be positive");
      c.w = *manual_w;
      return c;
    }
  }
  throw std::invalid_argument("choose_w: unknown mode");
}

RelaxationChoice choose_w_auto(const SystemInstance& inst, double gamma) {
  if (inst.users() > linalg::kFullEigenLimit) return choose_w(inst, gamma, RelaxationMode::GershgorinBound);
  RelaxationChoice exact = choose_w(inst, gamma, RelaxationMode::ExactEigen);
  if (exact.lambda_min && *exact.lambda_min > 0.0) return exact;
  // An indefinite A leaves no contracting w for the model matrix; fall back to
  // the row-sum bound, which keeps w below 2 / lambda_max.
  RelaxationChoice bound = choose_w(inst, gamma, RelaxationMode::GershgorinBound);
  bound.lambda_min = exact.lambda_min;
  bound.lambda_max = exact.lambda_max;
  bound.setup_flops += exact.setup_flops;
  set_admissibility(bound);
  return bound;
}

Matrix sagmpid_iteration_matrix(const SystemInstance& inst, double gamma, double w) {
  Matrix b = -w * build_A(inst, gamma);
  b.diagonal().array() += 1.0;
  return b;
}

GmpidOutput sagmpid_detect(const SystemInstance& inst, const Vector& y, const RelaxationChoice& relax,
                           const GmpidOptions& options) {
  if (!(relax.w > 0.0)) throw std::invalid_argument("sagmpid_detect: w must be positive");
  return detail::run_message_passing(inst, y, relax.w, options, relax.setup_flops);
}

}  // namespace gmpd
