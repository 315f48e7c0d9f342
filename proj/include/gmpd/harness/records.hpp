#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmpd/detection.hpp"

namespace gmpd::harness {

struct TrialRecord {
  std::string detector;
  double snr_db = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  int iterations = 0;
  std::uint64_t flops = 0;
  Termination terminated = Termination::Exact;
  std::int64_t wall_time_ns = 0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct AggregateRecord {
  std::string detector;
  double snr_db = 0.0;
  int trials = 0;
  double mean_mse = 0.0;
  double mean_iterations = 0.0;
  double mean_flops = 0.0;
  int converged = 0;  // trials ending Converged or Exact
};

inline constexpr const char* kCsvHeader = "detector,snr_db,trial,seed,mse,iterations,flops,terminated,wall_time_ns";
inline constexpr const char* kAggregateHeader =
    "detector,snr_db,trials,mean_mse,mean_iterations,mean_flops,converged";

/// One aggregate per (detector, snr) in first-appearance order.
std::vector<AggregateRecord> aggregate(const std::vector<TrialRecord>& records);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_json(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_json(std::istream& in);

/// Write to a file; throws std::runtime_error on I/O failure.
void emit_csv(const std::vector<TrialRecord>& records, const std::string& path);
void emit_json(const std::vector<TrialRecord>& records, const std::string& path);

}  // namespace gmpd::harness
