#include "gmpd/reference.hpp"

#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "gmpd/linalg.hpp"

namespace gmpd {

namespace {

using linalg::cholesky_flops;
using linalg::gram_flops;

std::uint64_t u64(Index v) { return static_cast<std::uint64_t>(v); }

void check_observation(const SystemInstance& inst, const Vector& y, const char* who) {
  if (y.size() != inst.antennas()) {
    throw std::invalid_argument(std::string(who) + ": y has length " + std::to_string(y.size()) +
                                ", expected M=" + std::to_string(inst.antennas()));
  }
}

Eigen::LLT<Matrix> factor_spd(const Matrix& a, const char* who) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(who) + ": matrix is not positive definite");
  }
  return llt;
}

/// diag(A^-1) from A = L L^T: squared column norms of L^-1.
Vector inverse_diagonal(const Eigen::LLT<Matrix>& llt) {
  const Index n = llt.rows();
  Matrix linv = Matrix::Identity(n, n);
  llt.matrixL().solveInPlace(linv);
  return linv.colwise().squaredNorm().transpose();
}

DetectionResult mmse_user_space(const SystemInstance& inst, const Vector& y) {
  const Index k = inst.users();
  const Index m = inst.antennas();
  const double inv_noise = 1.0 / inst.noise_var();

  Matrix a = linalg::gram(inst.channel()) * inv_noise;
  a.diagonal() += inst.prior().variances().cwiseInverse();
  const auto llt = factor_spd(a, "mmse_detect");

  DetectionResult r;
  r.x_hat = llt.solve(inst.channel().transpose() * y * inv_noise);
  r.post_var = inverse_diagonal(llt);
  r.flops = gram_flops(m, k) + 2 * u64(k) * u64(k) + cholesky_flops(k) + 2 * u64(m) * u64(k) +
            2 * u64(k) * u64(k) + u64(k) * u64(k) * u64(k) + 2 * u64(k) * u64(k);
  return r;
}

DetectionResult mmse_antenna_space(const SystemInstance& inst, const Vector& y) {
  const Index k = inst.users();
  const Index m = inst.antennas();
  const Matrix& h = inst.channel();
  const Vector& vx = inst.prior().variances();

  // C = sigma_n^2 I_M + H V_x H^T
  const Matrix hs = h * vx.cwiseSqrt().asDiagonal();
  Matrix c = Matrix::Zero(m, m);
  c.selfadjointView<Eigen::Lower>().rankUpdate(hs);
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  c.diagonal().array() += inst.noise_var();
  const auto llt = factor_spd(c, "mmse_detect");

  const Matrix cinv_h = llt.solve(h);  // C^-1 H
  DetectionResult r;
  r.x_hat = vx.cwiseProduct(h.transpose() * llt.solve(y));
  r.post_var.resize(k);
  for (Index i = 0; i < k; ++i) {
    r.post_var[i] = vx[i] - vx[i] * vx[i] * h.col(i).dot(cinv_h.col(i));
  }
  r.flops = u64(m) * u64(k) + gram_flops(k, m) + u64(m) + cholesky_flops(m) +
            2 * u64(m) * u64(m) * u64(k) + 2 * u64(m) * u64(k) + 2 * u64(m) * u64(m) +
            2 * u64(m) * u64(k) + 4 * u64(k);
  return r;
}

DetectionResult finish_exact(DetectionResult r) {
  r.iterations = 0;
  r.terminated = Termination::Exact;
  return r;
}

}  // namespace

MmseBranch mmse_branch(const SystemDims& dims) {
  return dims.users <= dims.antennas ? MmseBranch::UserSpace : MmseBranch::AntennaSpace;
}

DetectionResult mmse_detect(const SystemInstance& inst, const Vector& y) {
  return mmse_detect(inst, y, mmse_branch(inst.dims()));
}

DetectionResult mmse_detect(const SystemInstance& inst, const Vector& y, MmseBranch branch) {
  check_observation(inst, y, "mmse_detect");
  return finish_exact(branch == MmseBranch::UserSpace ? mmse_user_space(inst, y)
                                                      : mmse_antenna_space(inst, y));
}

DetectionResult matched_filter_detect(const SystemInstance& inst, const Vector& y) {
  check_observation(inst, y, "matched_filter_detect");
  const Index k = inst.users();
  const Index m = inst.antennas();
  const Matrix& h = inst.channel();
  const Vector& vx = inst.prior().variances();

  const Matrix g = linalg::gram(h);
  const Vector d = g.diagonal();
  for (Index i = 0; i < k; ++i) {
    if (d[i] == 0.0) throw NumericalError("matched_filter_detect: column " + std::to_string(i) + " is zero");
  }

  DetectionResult r;
  r.x_hat = (h.transpose() * y).cwiseQuotient(d);
  r.post_var.resize(k);
  for (Index i = 0; i < k; ++i) {
    double interference = 0.0;
    for (Index j = 0; j < k; ++j) {
      if (j != i) interference += vx[j] * g(i, j) * g(i, j);
    }
    r.post_var[i] = interference / (d[i] * d[i]) + inst.noise_var() / d[i];
  }
  r.flops = gram_flops(m, k) + 2 * u64(m) * u64(k) + u64(k) + 3 * u64(k) * u64(k) + 4 * u64(k);
  return finish_exact(std::move(r));
}

Vector zero_forcing_estimate(const Matrix& channel, const Vector& y) {
  if (y.size() != channel.rows()) throw std::invalid_argument("zero_forcing_estimate: y length must equal M");
  if (channel.cols() > channel.rows()) {
    throw NumericalError("zero_forcing_estimate: K > M, H^T H is rank deficient");
  }
  const Matrix g = linalg::gram(channel);
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    throw NumericalError("zero_forcing_estimate: H^T H is rank deficient");
  }
  return llt.solve(channel.transpose() * y);
}

DetectionResult inverse_filter_detect(const SystemInstance& inst, const Vector& y) {
  check_observation(inst, y, "inverse_filter_detect");
  const Index k = inst.users();
  const Index m = inst.antennas();
  if (k > m) throw NumericalError("inverse_filter_detect: K > M, H^T H is rank deficient");

  const Matrix g = linalg::gram(inst.channel());
  Eigen::LLT<Matrix> g_llt(g);
  if (g_llt.info() != Eigen::Success || g_llt.rcond() < 1e-14) {
    throw NumericalError("inverse_filter_detect: H^T H is rank deficient");
  }
  // Zero-forcing output: x~ ~ N(x, sigma_n^2 (H^T H)^-1).
  const Vector x_tilde = g_llt.solve(inst.channel().transpose() * y);

  // Equality-node combination with N(0, V_x): W = W_n' + V_x^-1, m = W^-1 W_n' x~.
  const Matrix w_noise = g / inst.noise_var();
  Matrix w = w_noise;
  w.diagonal() += inst.prior().variances().cwiseInverse();
  const auto w_llt = factor_spd(w, "inverse_filter_detect");

  DetectionResult r;
  r.x_hat = w_llt.solve(w_noise * x_tilde);
  r.post_var = inverse_diagonal(w_llt);
  r.flops = gram_flops(m, k) + cholesky_flops(k) + 2 * u64(m) * u64(k) + 4 * u64(k) * u64(k) +
            2 * u64(k) * u64(k) + cholesky_flops(k) + 4 * u64(k) * u64(k) + u64(k) * u64(k) * u64(k);
  return finish_exact(std::move(r));
}

DetectionResult gmp_block_detect(const SystemInstance& inst, const Vector& y) {
  check_observation(inst, y, "gmp_block_detect");
  const Index k = inst.users();
  const Index m = inst.antennas();
  const Matrix& h = inst.channel();

  // Message on y: mean y, covariance sigma_n^2 I_M; its precision by dense inversion.
  const Matrix v_y = Matrix::Identity(m, m) * inst.noise_var();
  const auto vy_llt = factor_spd(v_y, "gmp_block_detect");
  const Matrix w_y = vy_llt.solve(Matrix::Identity(m, m));

  // Backward message through the multiplier node y = H x.
  const Matrix w_y_h = w_y * h;
  const Matrix w_x = h.transpose() * w_y_h;
  const Vector xi = h.transpose() * (w_y * y);

  // Combine with the prior N(0, V_x).
  Matrix w = w_x;
  w.diagonal() += inst.prior().variances().cwiseInverse();
  const Eigen::PartialPivLU<Matrix> lu(w);

  DetectionResult r;
  r.x_hat = lu.solve(xi);
  r.post_var = lu.inverse().diagonal();
  const auto mm = u64(m);
  const auto kk = u64(k);
  r.flops = cholesky_flops(m) + mm * mm * mm + 2 * mm * mm * kk + 2 * mm * kk * kk + 2 * mm * mm +
            2 * mm * kk + kk + 2 * kk * kk * kk / 3 + 2 * kk * kk + 2 * kk * kk * kk;
  return finish_exact(std::move(r));
}

}  // namespace gmpd
