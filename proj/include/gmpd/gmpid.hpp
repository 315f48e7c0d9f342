#pragma once

// Gaussian message passing on the pairwise graph of K variable nodes and M
// sum nodes. Variances travel as precisions so the +inf initialization is an
// exact zero.

#include <functional>
#include <optional>

#include "gmpd/detection.hpp"
#include "gmpd/model.hpp"

namespace gmpd {

/// The four message arrays. A precision of 0 stands for variance +inf.
struct MessageState {
  Matrix E_us;  // K x M, means e^v_{k->m}
  Matrix W_us;  // K x M, precisions 1 / v^v_{k->m}
  Matrix E_su;  // M x K, means e^s_{m->k}
  Matrix W_su;  // M x K, precisions 1 / v^s_{m->k}

  /// Zero means, infinite variances.
  static MessageState initial(const SystemDims& dims);

  Matrix V_us() const;
  Matrix V_su() const;

  friend bool operator==(const MessageState& a, const MessageState& b);
};

struct SumNodeStats {
  double mean_var = 0.0;  // mean of V_su, +inf if any entry is infinite
};

struct VariableNodeStats {
  double max_change = 0.0;  // max |E_us(t) - E_us(t-1)|
  double mean_var = 0.0;    // mean of V_us
  Vector x_hat;             // decision from the same sums
  Vector post_var;
};

/// Per-iteration flop models of the two kernels.
std::uint64_t sum_node_flops(const SystemDims& dims, bool relaxed);
std::uint64_t variable_node_flops(const SystemDims& dims, bool relaxed);

/// Sum-node pass: e^s_{m->k} = s (y_m - sum_{i!=k} h_mi e^v_{i->m}) with s = sqrt(relaxation),
/// v^s_{m->k} = sum_{i!=k} h_mi^2 v^v_{i->m} + sigma_n^2.
SumNodeStats sum_node_update(MessageState& state, const SystemInstance& inst, const Vector& y,
                             double relaxation = 1.0);

/// Variable-node pass with full information:
/// v^v_k = (sum_m h_mk^2 / v^s_{m->k} + 1/sigma_xk^2)^-1,
/// e^v_k = s v^v_k sum_m h_mk e^s_{m->k} / v^s_{m->k} - (relaxation - 1) e^v_{k->m}(t-1).
/// The decision adds -(relaxation - 1)/M sum_m e^v_{k->m}(t-1) instead of the per-edge memory.
VariableNodeStats variable_node_update(MessageState& state, const SystemInstance& inst,
                                       double relaxation = 1.0);

/// Limits of the message variances for a homogeneous prior.
struct VarianceFixedPoint {
  double sigma_hat_sq = 0.0;    // variable-node variance
  double sigma_tilde_sq = 0.0;  // sum-node variance, K sigma_hat^2 + sigma_n^2
  double gamma = 0.0;           // sigma_hat^2 / sigma_tilde^2
};

VarianceFixedPoint variance_fixed_point(Index users, Index antennas, double source_var, double noise_var);
VarianceFixedPoint variance_fixed_point(const SystemInstance& inst);

/// Large-system limit of sigma_hat^2: sigma_n^2/(M-K+1/snr) below unit load,
/// (K-M) sigma_x^2/K above, sqrt(sigma_x^2 sigma_n^2 / K) at K = M.
double variance_asymptote(Index users, Index antennas, double source_var, double noise_var);

/// 1/(M + 1/snr), the large-M form of gamma.
double gamma_approximation(Index antennas, double source_var, double noise_var);

/// gamma (H^T H - D), the mean-update matrix once the variances have settled.
Matrix gmpid_iteration_matrix(const SystemInstance& inst, double gamma);

enum class VarianceSchedule {
  Interleaved,  // variances and means advance together
  Frozen,       // variances iterated to their limit first, then held fixed
};

using StateObserver = std::function<void(int t, const MessageState&)>;

struct GmpidOptions {
  std::optional<double> eps;  // default 1e-8 (1 + ||y||_inf)
  int max_iter = 500;
  VarianceSchedule schedule = VarianceSchedule::Interleaved;
  TraceProbe probe;
  TraceCallback on_iteration;
  StateObserver on_state;
  bool record_trace = true;
};

struct GmpidOutput {
  DetectionResult result;
  IterationTrace trace;
  MessageState state;
};

inline constexpr int kDefaultMaxIterations = 500;
double default_eps(const Vector& y);
double divergence_threshold(const Vector& y);

GmpidOutput gmpid_detect(const SystemInstance& inst, const Vector& y, const GmpidOptions& options = {});

namespace detail {
/// Shared driver; relaxation 1 is plain GMPID.
GmpidOutput run_message_passing(const SystemInstance& inst, const Vector& y, double relaxation,
                                const GmpidOptions& options, std::uint64_t setup_flops);
}  // namespace detail

}  // namespace gmpd
