#include "gmpd/classic.hpp"

#include <cmath>
#include <stdexcept>

#include "gmpd/linalg.hpp"

namespace gmpd {

double divergence_threshold(const AffineIteration& iter) {
  return 1e12 * (1.0 + iter.c.lpNorm<Eigen::Infinity>());
}

std::uint64_t affine_step_flops(Index n) {
  const auto k = static_cast<std::uint64_t>(n);
  return 2 * k * k + 2 * k;
}

IterateResult iterate(const AffineIteration& iter, const Vector& x0, double eps, int max_iter,
                      const TraceProbe& probe) {
  const Index n = iter.B.rows();
  if (iter.B.cols() != n || iter.c.size() != n || x0.size() != n) {
    throw std::invalid_argument("iterate: inconsistent dimensions");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("iterate: eps must be positive");
  if (max_iter < 1) throw std::invalid_argument("iterate: max_iter must be >= 1");
  if (probe.oracle && probe.oracle->size() != n) throw std::invalid_argument("iterate: oracle length");
  if (probe.truth && probe.truth->size() != n) throw std::invalid_argument("iterate: truth length");

  const double threshold = divergence_threshold(iter);
  const double oracle_norm = probe.oracle ? probe.oracle->norm() : 0.0;
  IterateResult r;
  r.x = x0;
  r.flops = iter.setup_flops;
  Vector next(n);
  for (int t = 1; t <= max_iter; ++t) {
    next.noalias() = iter.B * r.x;
    next += iter.c;
    const double change = (next - r.x).lpNorm<Eigen::Infinity>();
    r.x.swap(next);
    r.flops += affine_step_flops(n);
    r.iterations = t;

    IterationRecord rec;
    rec.t = t;
    rec.change = change;
    if (probe.oracle) rec.oracle_error = (r.x - *probe.oracle).norm();
    if (probe.truth) rec.truth_mse = mse(*probe.truth, r.x);
    rec.flops = r.flops;
    r.trace.push_back(rec);

    if (!r.x.allFinite() || !std::isfinite(change) || r.x.lpNorm<Eigen::Infinity>() > threshold) {
      r.terminated = Termination::Diverged;
      return r;
    }
    if (rec.oracle_error && probe.stop_at_oracle_rel > 0.0) {
      const double rel = oracle_norm > 0.0 ? *rec.oracle_error / oracle_norm : *rec.oracle_error;
      if (rel < probe.stop_at_oracle_rel) {
        r.terminated = Termination::Converged;
        return r;
      }
    }
    if (change < eps) {
      r.terminated = Termination::Converged;
      return r;
    }
  }
  r.terminated = Termination::MaxIterations;
  return r;
}

ConvergenceReport check_proposition1(const Matrix& b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("check_proposition1: B must be square");
  ConvergenceReport rep;
  // I - B dominates when its unit diagonal outweighs every row of B; for a
  // zero-diagonal B this is ordinary strict dominance of I - B.
  bool dominant = true;
  for (Index k = 0; k < b.rows(); ++k) {
    if (!(b.row(k).cwiseAbs().sum() < 1.0)) {
      dominant = false;
      break;
    }
  }
  rep.diag_dominant = dominant;
  rep.spectral_radius = linalg::spectral_radius(b);
  rep.predicted_converges = rep.diag_dominant || rep.spectral_radius < 1.0;
  return rep;
}

NormalEquations mmse_normal_equations(const SystemInstance& inst, const Vector& y) {
  if (y.size() != inst.antennas()) throw std::invalid_argument("normal equations: y must have length M");
  const double inv_noise = 1.0 / inst.noise_var();
  NormalEquations ne;
  ne.A = linalg::gram(inst.channel()) * inv_noise;
  ne.A.diagonal() += inst.prior().variances().cwiseInverse();
  ne.b = inst.channel().transpose() * y * inv_noise;
  const auto k = static_cast<std::uint64_t>(inst.users());
  const auto m = static_cast<std::uint64_t>(inst.antennas());
  ne.flops = linalg::gram_flops(inst.antennas(), inst.users()) + k * k + 2 * k + 2 * m * k + k;
  return ne;
}

AffineIteration jacobi_for_mmse(const SystemInstance& inst, const Vector& y) {
  NormalEquations ne = mmse_normal_equations(inst, y);
  const Vector d = ne.A.diagonal();
  if ((d.array() == 0.0).any()) throw std::invalid_argument("jacobi_for_mmse: zero diagonal entry");
  const Vector inv_d = d.cwiseInverse();
  AffineIteration it;
  it.B = -(inv_d.asDiagonal() * ne.A);
  it.B.diagonal().setZero();
  it.c = inv_d.cwiseProduct(ne.b);
  it.label = "jacobi";
  it.precision_diag = d;
  const auto k = static_cast<std::uint64_t>(inst.users());
  it.setup_flops = ne.flops + k * k + 2 * k;
  return it;
}

AffineIteration richardson_for_mmse(const SystemInstance& inst, const Vector& y, std::optional<double> omega) {
  NormalEquations ne = mmse_normal_equations(inst, y);
  const auto k = static_cast<std::uint64_t>(inst.users());
  std::uint64_t flops = ne.flops;
  double w = 0.0;
  if (omega) {
    if (!(*omega > 0.0)) throw std::invalid_argument("richardson_for_mmse: omega must be positive");
    w = *omega;
  } else {
    const auto ev = linalg::extreme_eigenvalues(ne.A);
    w = 2.0 / (ev.min + ev.max);
    flops += linalg::symmetric_eigen_flops(inst.users());
  }
  AffineIteration it;
  it.B = -w * ne.A;
  it.B.diagonal().array() += 1.0;
  it.c = w * ne.b;
  it.label = "richardson";
  it.precision_diag = ne.A.diagonal();
  it.setup_flops = flops + 2 * k * k + k;
  return it;
}

DetectionResult run_affine_detector(const AffineIteration& iter, double eps, int max_iter,
                                    const TraceProbe& probe, IterationTrace* trace) {
  IterateResult ir = iterate(iter, Vector::Zero(iter.c.size()), eps, max_iter, probe);
  DetectionResult r;
  r.x_hat = std::move(ir.x);
  r.iterations = ir.iterations;
  r.flops = ir.flops;
  r.terminated = ir.terminated;
  if (iter.precision_diag.size() == r.x_hat.size()) r.post_var = iter.precision_diag.cwiseInverse();
  if (trace) *trace = std::move(ir.trace);
  return r;
}

}  // namespace gmpd
