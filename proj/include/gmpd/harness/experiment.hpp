#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gmpd/harness/config.hpp"
#include "gmpd/harness/records.hpp"
#include "gmpd/model.hpp"

namespace gmpd::harness {

/// The shared problem of one (snr, trial) cell.
struct Trial {
  std::size_t snr_index = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  SystemInstance instance;
  Realization realization;
};

Trial make_trial(const ExperimentConfig& config, std::size_t snr_index, int trial);

/// FNV-1a over the bytes of H and y.
std::uint64_t checksum(const Matrix& h, const Vector& y);

/// Called once per detector run with the checksum of the (H, y) it received.
using PairingObserver =
    std::function<void(std::size_t snr_index, int trial, const std::string& detector, std::uint64_t checksum)>;

/// One record per (detector, snr, trial), sorted by detector order, snr, trial.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config, const PairingObserver& observer = {});

struct MsetRow {
  int t = 0;
  double avg_var_us = 0.0;
  double avg_var_su = 0.0;
  double decision_var = 0.0;
  double sample_mse = 0.0;
};

/// Trial-averaged per-iteration variances and decision MSE; one SNR, one
/// gmpid or sagmpid detector, interleaved schedule, max_iter rows.
std::vector<MsetRow> run_mset_trace(const ExperimentConfig& config);
void write_mset_csv(std::ostream& out, const std::vector<MsetRow>& rows);

enum class Verdict { Converges, Diverges };
char verdict_letter(Verdict v);

struct ConvergenceTableOptions {
  double snr_db = 70.0;
  int trials = 20;
  std::uint64_t master_seed = 1;
  int max_iter = 100000;
  double eps = std::numeric_limits<double>::min();  // step-change stop; slow contractions need it out of the way
  double rel_tol = 1e-4;         // distance to the MMSE estimate counted as converged
  double required_fraction = 0.95;
  std::vector<std::string> detectors{"jacobi", "gmpid", "richardson", "sagmpid"};
  WModeSpec w_mode;
};

struct TableCell {
  double beta = 0.0;  // requested load
  Index users = 0;
  Index antennas = 0;
  std::string detector;
  int converged = 0;
  int trials = 0;
  double median_rel_error = 0.0;
  Verdict verdict = Verdict::Diverges;
};

/// M = round(K / beta) for each load; verdict C when at least the required
/// fraction of trials gets within rel_tol of the MMSE estimate.
std::vector<TableCell> run_convergence_table(const std::vector<double>& beta_list, Index users,
                                             const ConvergenceTableOptions& options);
void write_table_csv(std::ostream& out, const std::vector<TableCell>& cells);

struct ComplexityPoint {
  std::string detector;
  int iteration = 0;       // 0 for one-shot detectors
  double mean_flops = 0.0;
  double mean_mse = 0.0;
};

struct ComplexitySummary {
  std::string detector;
  bool reached = false;
  int iterations = 0;
  double mean_flops = 0.0;  // cumulative flops at the first iteration on target
};

struct ComplexityResult {
  double mmse_mean_mse = 0.0;
  double mmse_mean_flops = 0.0;
  double target_rel = 0.1;
  std::vector<ComplexityPoint> curve;
  std::vector<ComplexitySummary> summary;
};

/// Trial-averaged MSE against cumulative flops at the first SNR of the grid.
/// A detector reaches the target at the first t with |MSE(t)/MSE_MMSE - 1| < target_rel.
ComplexityResult run_complexity(const ExperimentConfig& config, double target_rel = 0.1);
void write_complexity_csv(std::ostream& out, const ComplexityResult& result);

}  // namespace gmpd::harness
