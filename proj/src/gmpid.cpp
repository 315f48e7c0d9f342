#include "gmpd/gmpid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmpd/linalg.hpp"

namespace gmpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kFrozenVarianceMaxIterations = 1000;
constexpr double kFrozenVarianceTolerance = 1e-14;

std::uint64_t edges(const SystemDims& dims) {
  return static_cast<std::uint64_t>(dims.users) * static_cast<std::uint64_t>(dims.antennas);
}

void check_shapes(const MessageState& s, const SystemInstance& inst) {
  const Index k = inst.users();
  const Index m = inst.antennas();
  if (s.E_us.rows() != k || s.E_us.cols() != m || s.W_us.rows() != k || s.W_us.cols() != m ||
      s.E_su.rows() != m || s.E_su.cols() != k || s.W_su.rows() != m || s.W_su.cols() != k) {
    throw std::invalid_argument("message state does not match K=" + std::to_string(k) +
                                ", M=" + std::to_string(m));
  }
}

/// Scratch reused across iterations of one detection.
struct Workspace {
  Matrix h_sq;       // M x K, h_mk^2
  Matrix own_mean;   // M x K, h_mk e^v_{k->m}
  Matrix own_var;    // M x K, h_mk^2 v^v_{k->m} (0 when infinite)
  Vector residual;   // M, y_m - sum_i h_mi e^v_{i->m}
  Vector var_total;  // M, sum of finite h_mi^2 v^v_{i->m}
  std::vector<Index> inf_count;  // M, number of infinite terms in var_total

  explicit Workspace(const SystemInstance& inst)
      : h_sq(inst.channel().array().square().matrix()),
        own_mean(inst.antennas(), inst.users()),
        own_var(inst.antennas(), inst.users()),
        residual(inst.antennas()),
        var_total(inst.antennas()),
        inf_count(static_cast<std::size_t>(inst.antennas())) {}
};

SumNodeStats sum_node_kernel(MessageState& s, const SystemInstance& inst, const Vector& y,
                             double relaxation, bool update_var, Workspace& ws) {
  const Index users = inst.users();
  const Index antennas = inst.antennas();
  const Matrix& h = inst.channel();
  const double noise = inst.noise_var();
  const bool relaxed = relaxation != 1.0;
  const double scale = std::sqrt(relaxation);

  ws.residual = y;
  if (update_var) {
    ws.var_total.setZero();
    std::fill(ws.inf_count.begin(), ws.inf_count.end(), Index{0});
  }
  for (Index k = 0; k < users; ++k) {
    for (Index m = 0; m < antennas; ++m) {
      const double own = h(m, k) * s.E_us(k, m);
      ws.own_mean(m, k) = own;
      ws.residual[m] -= own;
      if (update_var) {
        const double w = s.W_us(k, m);
        const double h2 = ws.h_sq(m, k);
        if (w > 0.0) {
          const double v = h2 / w;
          ws.own_var(m, k) = v;
          ws.var_total[m] += v;
        } else {
          ws.own_var(m, k) = 0.0;
          if (h2 > 0.0) ++ws.inf_count[static_cast<std::size_t>(m)];
        }
      }
    }
  }

  SumNodeStats stats;
  double var_sum = 0.0;
  bool any_inf = false;
  for (Index k = 0; k < users; ++k) {
    for (Index m = 0; m < antennas; ++m) {
      const double extrinsic = ws.residual[m] + ws.own_mean(m, k);
      s.E_su(m, k) = relaxed ? scale * extrinsic : extrinsic;
      if (update_var) {
        const bool own_inf = s.W_us(k, m) == 0.0 && ws.h_sq(m, k) > 0.0;
        const Index others_inf = ws.inf_count[static_cast<std::size_t>(m)] - (own_inf ? 1 : 0);
        if (others_inf > 0) {
          s.W_su(m, k) = 0.0;
          any_inf = true;
        } else {
          // The subtraction can dip below zero by rounding only.
          const double v = std::max(ws.var_total[m] - ws.own_var(m, k), 0.0) + noise;
          s.W_su(m, k) = 1.0 / v;
          var_sum += v;
        }
      }
    }
  }
  if (update_var) {
    stats.mean_var = any_inf ? kInf : var_sum / static_cast<double>(edges(inst.dims()));
  }
  return stats;
}

VariableNodeStats variable_node_kernel(MessageState& s, const SystemInstance& inst, double relaxation,
                                       bool update_var, const Matrix& h_sq) {
  const Index users = inst.users();
  const Index antennas = inst.antennas();
  const Matrix& h = inst.channel();
  const bool relaxed = relaxation != 1.0;
  const double scale = std::sqrt(relaxation);
  const double memory = relaxation - 1.0;

  VariableNodeStats stats;
  stats.x_hat.resize(users);
  stats.post_var.resize(users);
  double change = 0.0;
  double var_sum = 0.0;
  for (Index k = 0; k < users; ++k) {
    double precision = 0.0;
    if (update_var) {
      precision = 1.0 / inst.prior().variance(k);
      for (Index m = 0; m < antennas; ++m) precision += h_sq(m, k) * s.W_su(m, k);
    } else {
      precision = s.W_us(k, 0);
    }
    double weighted = 0.0;
    for (Index m = 0; m < antennas; ++m) weighted += h(m, k) * s.W_su(m, k) * s.E_su(m, k);
    const double var = 1.0 / precision;
    const double base = relaxed ? scale * var * weighted : var * weighted;

    double decision = base;
    if (relaxed) {
      double previous_sum = 0.0;
      for (Index m = 0; m < antennas; ++m) {
        const double previous = s.E_us(k, m);
        previous_sum += previous;
        const double next = base - memory * previous;
        change = std::max(change, std::abs(next - previous));
        s.E_us(k, m) = next;
      }
      decision = base - memory / static_cast<double>(antennas) * previous_sum;
    } else {
      for (Index m = 0; m < antennas; ++m) {
        change = std::max(change, std::abs(base - s.E_us(k, m)));
        s.E_us(k, m) = base;
      }
    }
    if (update_var) {
      for (Index m = 0; m < antennas; ++m) s.W_us(k, m) = precision;
    }
    stats.x_hat[k] = decision;
    stats.post_var[k] = var;
    var_sum += var;
  }
  stats.max_change = change;
  stats.mean_var = var_sum / static_cast<double>(users);
  return stats;
}

double mean_su_variance(const MessageState& s) {
  if ((s.W_su.array() == 0.0).any()) return kInf;
  return s.W_su.cwiseInverse().mean();
}

double relative_error(const Vector& x, const Vector& ref) {
  const double norm = ref.norm();
  const double diff = (x - ref).norm();
  return norm > 0.0 ? diff / norm : diff;
}

}  // namespace

// --- MessageState ------------------------------------------------------------

MessageState MessageState::initial(const SystemDims& dims) {
  MessageState s;
  s.E_us = Matrix::Zero(dims.users, dims.antennas);
  s.W_us = Matrix::Zero(dims.users, dims.antennas);
  s.E_su = Matrix::Zero(dims.antennas, dims.users);
  s.W_su = Matrix::Zero(dims.antennas, dims.users);
  return s;
}

namespace {
Matrix variances_from_precisions(const Matrix& w) {
  return w.unaryExpr([](double p) { return p == 0.0 ? kInf : 1.0 / p; });
}
}  // namespace

Matrix MessageState::V_us() const { return variances_from_precisions(W_us); }
Matrix MessageState::V_su() const { return variances_from_precisions(W_su); }

bool operator==(const MessageState& a, const MessageState& b) {
  return a.E_us.rows() == b.E_us.rows() && a.E_us.cols() == b.E_us.cols() && a.E_us == b.E_us &&
         a.W_us == b.W_us && a.E_su == b.E_su && a.W_su == b.W_su;
}

// --- kernels -----------------------------------------------------------------

std::uint64_t sum_node_flops(const SystemDims& dims, bool relaxed) {
  // Aggregates: 2 per edge for means, 2 for variances; extrinsic outputs: 1
  // for the mean, 3 for the variance, 1 more for the scaling when relaxed.
  return (8 + (relaxed ? 1 : 0)) * edges(dims) + static_cast<std::uint64_t>(dims.antennas);
}

std::uint64_t variable_node_flops(const SystemDims& dims, bool relaxed) {
  // Precision sum 2, weighted mean sum 3, change 1; memory term and decision
  // correction 3 more when relaxed.
  return (6 + (relaxed ? 3 : 0)) * edges(dims) + 4 * static_cast<std::uint64_t>(dims.users);
}

namespace {
std::uint64_t frozen_iteration_flops(const SystemDims& dims, bool relaxed) {
  return (3 + 4 + (relaxed ? 4 : 0)) * edges(dims) + static_cast<std::uint64_t>(dims.antennas) +
         2 * static_cast<std::uint64_t>(dims.users);
}
}  // namespace

SumNodeStats sum_node_update(MessageState& state, const SystemInstance& inst, const Vector& y,
                             double relaxation) {
  check_shapes(state, inst);
  if (y.size() != inst.antennas()) throw std::invalid_argument("sum_node_update: y must have length M");
  if (!(relaxation > 0.0)) throw std::invalid_argument("sum_node_update: relaxation must be positive");
  Workspace ws(inst);
  return sum_node_kernel(state, inst, y, relaxation, true, ws);
}

VariableNodeStats variable_node_update(MessageState& state, const SystemInstance& inst, double relaxation) {
  check_shapes(state, inst);
  if (!(relaxation > 0.0)) throw std::invalid_argument("variable_node_update: relaxation must be positive");
  if ((state.W_su.array() < 0.0).any()) {
    throw std::logic_error("variable_node_update: negative sum-node precision");
  }
  const Matrix h_sq = inst.channel().array().square().matrix();
  return variable_node_kernel(state, inst, relaxation, true, h_sq);
}

// --- variance fixed point ----------------------------------------------------

VarianceFixedPoint variance_fixed_point(Index users, Index antennas, double source_var, double noise_var) {
  if (users < 1 || antennas < 1) throw std::invalid_argument("variance_fixed_point: K, M must be >= 1");
  if (!(source_var > 0.0) || !(noise_var > 0.0)) {
    throw std::invalid_argument("variance_fixed_point: variances must be positive");
  }
  const double k = static_cast<double>(users);
  const double m = static_cast<double>(antennas);
  const double ratio = noise_var / source_var;
  const double b = ratio + m - k;
  // Positive root of K/sx2 s^2 + (sn2/sx2 + M - K) s - sn2 = 0, written
  // without the cancellation of the textbook form when b > 0.
  const double disc = std::sqrt(b * b + 4.0 * k * ratio);
  const double s = b > 0.0 ? 2.0 * noise_var / (b + disc) : (disc - b) / (2.0 * k / source_var);
  VarianceFixedPoint fp;
  fp.sigma_hat_sq = s;
  fp.sigma_tilde_sq = k * s + noise_var;
  fp.gamma = s / fp.sigma_tilde_sq;
  return fp;
}

VarianceFixedPoint variance_fixed_point(const SystemInstance& inst) {
  return variance_fixed_point(inst.users(), inst.antennas(), inst.prior().common_variance(), inst.noise_var());
}

double variance_asymptote(Index users, Index antennas, double source_var, double noise_var) {
  const double k = static_cast<double>(users);
  const double m = static_cast<double>(antennas);
  if (users < antennas) return noise_var / (m - k + noise_var / source_var);
  if (users > antennas) return (k - m) * source_var / k;
  return std::sqrt(source_var * noise_var / k);
}

double gamma_approximation(Index antennas, double source_var, double noise_var) {
  return 1.0 / (static_cast<double>(antennas) + noise_var / source_var);
}

Matrix gmpid_iteration_matrix(const SystemInstance& inst, double gamma) {
  Matrix b = linalg::gram(inst.channel());
  b.diagonal().setZero();
  return gamma * b;
}

// --- driver ------------------------------------------------------------------

double default_eps(const Vector& y) { return 1e-8 * (1.0 + y.lpNorm<Eigen::Infinity>()); }

double divergence_threshold(const Vector& y) { return 1e12 * (1.0 + y.lpNorm<Eigen::Infinity>()); }

namespace detail {

GmpidOutput run_message_passing(const SystemInstance& inst, const Vector& y, double relaxation,
                                const GmpidOptions& options, std::uint64_t setup_flops) {
  if (y.size() != inst.antennas()) throw std::invalid_argument("detector: y must have length M");
  if (!(relaxation > 0.0)) throw std::invalid_argument("detector: relaxation must be positive");
  if (options.max_iter < 1) throw std::invalid_argument("detector: max_iter must be >= 1");
  const double eps = options.eps.value_or(default_eps(y));
  if (!(eps > 0.0)) throw std::invalid_argument("detector: eps must be positive");
  const TraceProbe& probe = options.probe;
  if (probe.oracle && probe.oracle->size() != inst.users()) throw std::invalid_argument("oracle must have length K");
  if (probe.truth && probe.truth->size() != inst.users()) throw std::invalid_argument("truth must have length K");

  const SystemDims dims = inst.dims();
  const bool relaxed = relaxation != 1.0;
  const bool frozen = options.schedule == VarianceSchedule::Frozen;
  const double threshold = divergence_threshold(y);

  GmpidOutput out;
  out.state = MessageState::initial(dims);
  Workspace ws(inst);
  std::uint64_t flops = setup_flops + edges(dims);  // h^2

  double frozen_su_var = 0.0;
  if (frozen) {
    const Vector zero_y = Vector::Zero(inst.antennas());
    Matrix previous = out.state.W_us;
    for (int it = 0; it < kFrozenVarianceMaxIterations; ++it) {
      sum_node_kernel(out.state, inst, zero_y, 1.0, true, ws);
      variable_node_kernel(out.state, inst, 1.0, true, ws.h_sq);
      flops += 7 * edges(dims) + 4 * static_cast<std::uint64_t>(dims.users);
      const double diff = (out.state.W_us - previous).cwiseAbs().maxCoeff();
      const double scale = out.state.W_us.cwiseAbs().maxCoeff();
      previous = out.state.W_us;
      if (it > 0 && diff <= kFrozenVarianceTolerance * scale) break;
    }
    out.state.E_us.setZero();
    out.state.E_su.setZero();
    frozen_su_var = mean_su_variance(out.state);
  }

  const std::uint64_t per_iteration =
      frozen ? frozen_iteration_flops(dims, relaxed)
             : sum_node_flops(dims, relaxed) + variable_node_flops(dims, relaxed);

  DetectionResult& r = out.result;
  r.terminated = Termination::MaxIterations;
  for (int t = 1; t <= options.max_iter; ++t) {
    const SumNodeStats ss = sum_node_kernel(out.state, inst, y, relaxation, !frozen, ws);
    VariableNodeStats vs = variable_node_kernel(out.state, inst, relaxation, !frozen, ws.h_sq);
    flops += per_iteration;
    r.x_hat = std::move(vs.x_hat);
    r.post_var = std::move(vs.post_var);
    r.iterations = t;

    std::optional<double> oracle_error;
    if (probe.oracle) oracle_error = relative_error(r.x_hat, *probe.oracle);
    if (options.record_trace) {
      IterationRecord rec;
      rec.t = t;
      rec.change = vs.max_change;
      if (probe.oracle) rec.oracle_error = (r.x_hat - *probe.oracle).norm();
      if (probe.truth) rec.truth_mse = mse(*probe.truth, r.x_hat);
      rec.avg_var = vs.mean_var;
      rec.avg_var_su = frozen ? frozen_su_var : ss.mean_var;
      rec.flops = flops;
      out.trace.push_back(rec);
    }
    if (options.on_iteration) options.on_iteration(TraceEvent{t, vs.max_change, vs.mean_var});
    if (options.on_state) options.on_state(t, out.state);

    const bool finite = r.x_hat.allFinite() && std::isfinite(vs.max_change);
    if (!finite || r.x_hat.lpNorm<Eigen::Infinity>() > threshold) {
      r.terminated = Termination::Diverged;
      break;
    }
    if (oracle_error && probe.stop_at_oracle_rel > 0.0 && *oracle_error < probe.stop_at_oracle_rel) {
      r.terminated = Termination::Converged;
      break;
    }
    if (t >= 2 && vs.max_change < eps) {
      r.terminated = Termination::Converged;
      break;
    }
  }
  r.flops = flops;
  return out;
}

}  // namespace detail

GmpidOutput gmpid_detect(const SystemInstance& inst, const Vector& y, const GmpidOptions& options) {
  return detail::run_message_passing(inst, y, 1.0, options, 0);
}

}  // namespace gmpd
