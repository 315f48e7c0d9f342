#pragma once

// Result and trace types shared by every detector.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "gmpd/model.hpp"

namespace gmpd {

enum class Termination { Converged, MaxIterations, Diverged, Exact };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view s);

struct DetectionResult {
  Vector x_hat;
  Vector post_var;  // per-user error variance
  int iterations = 0;
  std::uint64_t flops = 0;
  Termination terminated = Termination::Exact;
};

struct IterationRecord {
  int t = 0;
  double change = 0.0;                  // ||x(t) - x(t-1)||_inf
  std::optional<double> oracle_error;   // ||x(t) - x*||_2 when an oracle is supplied
  std::optional<double> truth_mse;      // sample MSE against the transmitted x, when supplied
  double avg_var = 0.0;                 // mean V_us (message-passing detectors)
  double avg_var_su = 0.0;              // mean V_su; +inf while any entry is infinite
  std::uint64_t flops = 0;              // cumulative, including setup
};

using IterationTrace = std::vector<IterationRecord>;

struct TraceEvent {
  int t = 0;
  double mean_change = 0.0;
  double avg_var_us = 0.0;
};

using TraceCallback = std::function<void(const TraceEvent&)>;

/// Optional references used to enrich traces and stop early.
struct TraceProbe {
  std::optional<Vector> oracle;   // e.g. the MMSE estimate
  std::optional<Vector> truth;    // transmitted x
  /// When > 0 and an oracle is set, stop as Converged once
  /// ||x(t)-x*||_2 / ||x*||_2 < stop_at_oracle_rel.
  double stop_at_oracle_rel = 0.0;
};

}  // namespace gmpd
