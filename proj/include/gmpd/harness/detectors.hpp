#pragma once

#include <optional>

#include "gmpd/detection.hpp"
#include "gmpd/harness/config.hpp"
#include "gmpd/model.hpp"

namespace gmpd::harness {

struct RunSettings {
  int max_iter = 500;
  std::optional<double> eps;
  WModeSpec w_mode;
  TraceProbe probe;
  bool record_trace = false;
};

struct DetectorRun {
  DetectionResult result;
  IterationTrace trace;
};

/// Runs one registered detector; per-detector params override the settings.
DetectorRun run_detector(const DetectorSpec& spec, const SystemInstance& inst, const Vector& y,
                         const RunSettings& settings);

/// Is this detector iterative (produces a trace)?
bool is_iterative(std::string_view id);

}  // namespace gmpd::harness
