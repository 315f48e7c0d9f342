#include "gmpd/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "gmpd/harness/detectors.hpp"
#include "gmpd/reference.hpp"

namespace gmpd::harness {

namespace {

Trial build_trial(const SystemDims& dims, double snr_db, std::size_t snr_index, int trial, std::uint64_t seed) {
  Matrix h = generate_channel(dims, derive_seed(seed, kChannelStream));
  SystemInstance inst(std::move(h), SourcePrior::homogeneous(dims.users, 1.0), noise_var_from_snr_db(snr_db));
  Realization real = realize(inst, seed);
  return Trial{snr_index, trial, seed, snr_db, std::move(inst), std::move(real)};
}

/// Runs body(i) for i in [0, count) on up to `threads` workers; rethrows the first failure.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

RunSettings settings_from(const ExperimentConfig& config) {
  RunSettings s;
  s.max_iter = config.max_iter;
  s.eps = config.eps;
  s.w_mode = config.w_mode;
  return s;
}

}  // namespace

Trial make_trial(const ExperimentConfig& config, std::size_t snr_index, int trial) {
  const double snr_db = config.snr_grid_db.at(snr_index);
  return build_trial(config.dims, snr_db, snr_index, trial, trial_seed(config.master_seed, snr_index, trial));
}

std::uint64_t checksum(const Matrix& h, const Vector& y) {
  std::uint64_t hash = 1469598103934665603ULL;
  const auto feed = [&](const double* data, Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  feed(h.data(), h.size());
  feed(y.data(), y.size());
  return hash;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config, const PairingObserver& observer) {
  config.validate();
  const std::size_t n_snr = config.snr_grid_db.size();
  const std::size_t n_tasks = n_snr * static_cast<std::size_t>(config.trials);
  const std::size_t n_det = config.detectors.size();
  std::vector<std::vector<TrialRecord>> per_task(n_tasks);
  std::mutex observer_mutex;
  const RunSettings settings = settings_from(config);

  parallel_for(n_tasks, config.threads, [&](std::size_t task) {
    const std::size_t snr_index = task / static_cast<std::size_t>(config.trials);
    const int trial = static_cast<int>(task % static_cast<std::size_t>(config.trials));
    const Trial tr = make_trial(config, snr_index, trial);
    auto& out = per_task[task];
    out.reserve(n_det);
    for (const auto& spec : config.detectors) {
      if (observer) {
        std::lock_guard lock(observer_mutex);
        observer(snr_index, trial, spec.label, checksum(tr.instance.channel(), tr.realization.y));
      }
      const auto start = std::chrono::steady_clock::now();
      const DetectorRun run = run_detector(spec, tr.instance, tr.realization.y, settings);
      const auto stop = std::chrono::steady_clock::now();
      TrialRecord rec;
      rec.detector = spec.label;
      rec.snr_db = tr.snr_db;
      rec.trial = trial;
      rec.seed = tr.seed;
      rec.mse = mse(tr.realization.x, run.result.x_hat);
      rec.iterations = run.result.iterations;
      rec.flops = run.result.flops;
      rec.terminated = run.result.terminated;
      rec.wall_time_ns =
          config.record_wall_time ? std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count() : 0;
      out.push_back(std::move(rec));
    }
  });

  // Detector order first, then SNR, then trial; independent of scheduling.
  std::vector<TrialRecord> records;
  records.reserve(n_tasks * n_det);
  for (std::size_t d = 0; d < n_det; ++d) {
    for (std::size_t task = 0; task < n_tasks; ++task) records.push_back(per_task[task][d]);
  }
  return records;
}

// --- MSET trace ----------------------------------------------------------------

std::vector<MsetRow> run_mset_trace(const ExperimentConfig& config) {
  config.validate();
  if (config.snr_grid_db.size() != 1) throw ConfigError("mset trace needs exactly one SNR value");
  if (config.detectors.size() != 1 || (config.detectors[0].id != "gmpid" && config.detectors[0].id != "sagmpid")) {
    throw ConfigError("mset trace needs exactly one detector, gmpid or sagmpid");
  }
  DetectorSpec spec = config.detectors[0];
  spec.params.erase("schedule");
  spec.params.erase("eps");
  RunSettings settings = settings_from(config);
  if (const auto it = spec.params.find("max_iter"); it != spec.params.end()) {
    settings.max_iter = std::stoi(it->second);
    spec.params.erase(it);
  }
  // Run every trial for the full budget so rows line up across trials.
  settings.eps = std::numeric_limits<double>::denorm_min();
  settings.record_trace = true;

  std::vector<IterationTrace> traces(static_cast<std::size_t>(config.trials));
  parallel_for(traces.size(), config.threads, [&](std::size_t t) {
    const Trial tr = make_trial(config, 0, static_cast<int>(t));
    RunSettings s = settings;
    s.probe.truth = tr.realization.x;
    traces[t] = run_detector(spec, tr.instance, tr.realization.y, s).trace;
  });

  std::size_t rows = static_cast<std::size_t>(settings.max_iter);
  for (const auto& tr : traces) rows = std::min(rows, tr.size());
  std::vector<MsetRow> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    MsetRow& row = out[i];
    row.t = static_cast<int>(i) + 1;
    for (const auto& tr : traces) {
      row.avg_var_us += tr[i].avg_var;
      row.avg_var_su += tr[i].avg_var_su;
      row.decision_var += tr[i].avg_var;
      row.sample_mse += tr[i].truth_mse.value_or(0.0);
    }
    const double n = static_cast<double>(traces.size());
    row.avg_var_us /= n;
    row.avg_var_su /= n;
    row.decision_var /= n;
    row.sample_mse /= n;
  }
  return out;
}

void write_mset_csv(std::ostream& out, const std::vector<MsetRow>& rows) {
  out << "t,avg_var_us,avg_var_su,decision_var,sample_mse\n";
  for (const auto& r : rows) {
    out << r.t << ',' << format_double(r.avg_var_us) << ',' << format_double(r.avg_var_su) << ','
        << format_double(r.decision_var) << ',' << format_double(r.sample_mse) << '\n';
  }
}

// --- convergence table -------------------------------------------------------

char verdict_letter(Verdict v) { return v == Verdict::Converges ? 'C' : 'D'; }

std::vector<TableCell> run_convergence_table(const std::vector<double>& beta_list, Index users,
                                             const ConvergenceTableOptions& options) {
  if (beta_list.empty()) throw ConfigError("beta list must not be empty");
  if (users < 1) throw ConfigError("users must be >= 1");
  if (options.trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<DetectorSpec> specs;
  for (const auto& d : options.detectors) specs.push_back(DetectorSpec::parse(d));

  std::vector<TableCell> cells;
  for (std::size_t b = 0; b < beta_list.size(); ++b) {
    const double beta = beta_list[b];
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("every beta must lie in (0, 1)");
    const Index antennas = static_cast<Index>(std::llround(static_cast<double>(users) / beta));
    const SystemDims dims(users, antennas);

    std::vector<std::vector<double>> errors(specs.size());
    for (int t = 0; t < options.trials; ++t) {
      const Trial tr = build_trial(dims, options.snr_db, b, t, trial_seed(options.master_seed, b, t));
      const Vector oracle = mmse_detect(tr.instance, tr.realization.y).x_hat;
      RunSettings s;
      s.max_iter = options.max_iter;
      s.eps = options.eps;
      s.w_mode = options.w_mode;
      s.probe.oracle = oracle;
      s.probe.stop_at_oracle_rel = options.rel_tol;
      for (std::size_t d = 0; d < specs.size(); ++d) {
        const DetectorRun run = run_detector(specs[d], tr.instance, tr.realization.y, s);
        double rel = (run.result.x_hat - oracle).norm() / oracle.norm();
        if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
        errors[d].push_back(rel);
      }
    }
    for (std::size_t d = 0; d < specs.size(); ++d) {
      TableCell cell;
      cell.beta = beta;
      cell.users = users;
      cell.antennas = antennas;
      cell.detector = specs[d].label;
      cell.trials = options.trials;
      cell.converged = static_cast<int>(
          std::count_if(errors[d].begin(), errors[d].end(), [&](double e) { return e < options.rel_tol; }));
      auto sorted = errors[d];
      std::sort(sorted.begin(), sorted.end());
      cell.median_rel_error = sorted[sorted.size() / 2];
      cell.verdict = cell.converged >= options.required_fraction * options.trials ? Verdict::Converges
                                                                                  : Verdict::Diverges;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void write_table_csv(std::ostream& out, const std::vector<TableCell>& cells) {
  out << "beta,users,antennas,detector,converged,trials,median_rel_error,verdict\n";
  for (const auto& c : cells) {
    out << format_double(c.beta) << ',' << c.users << ',' << c.antennas << ',' << c.detector << ',' << c.converged
        << ',' << c.trials << ',' << format_double(c.median_rel_error) << ',' << verdict_letter(c.verdict) << '\n';
  }
}

// --- complexity --------------------------------------------------------------

ComplexityResult run_complexity(const ExperimentConfig& config, double target_rel) {
  config.validate();
  if (!(target_rel > 0.0)) throw ConfigError("target must be positive");
  const RunSettings base = settings_from(config);
  const std::size_t n_trials = static_cast<std::size_t>(config.trials);
  const std::size_t n_det = config.detectors.size();

  struct TrialCurves {
    double mmse_mse = 0.0;
    double mmse_flops = 0.0;
    std::vector<std::vector<std::pair<double, double>>> curves;  // per detector: (flops, mse) per point
  };
  std::vector<TrialCurves> per_trial(n_trials);
  parallel_for(n_trials, config.threads, [&](std::size_t t) {
    const Trial tr = make_trial(config, 0, static_cast<int>(t));
    const DetectionResult ref = mmse_detect(tr.instance, tr.realization.y);
    TrialCurves& tc = per_trial[t];
    tc.mmse_mse = mse(tr.realization.x, ref.x_hat);
    tc.mmse_flops = static_cast<double>(ref.flops);
    tc.curves.resize(n_det);
    RunSettings s = base;
    s.record_trace = true;
    s.probe.truth = tr.realization.x;
    for (std::size_t d = 0; d < n_det; ++d) {
      const DetectorRun run = run_detector(config.detectors[d], tr.instance, tr.realization.y, s);
      auto& curve = tc.curves[d];
      if (run.trace.empty()) {
        curve.emplace_back(static_cast<double>(run.result.flops), mse(tr.realization.x, run.result.x_hat));
      } else {
        for (const auto& rec : run.trace) curve.emplace_back(static_cast<double>(rec.flops), rec.truth_mse.value_or(0.0));
      }
    }
  });

  ComplexityResult result;
  result.target_rel = target_rel;
  for (const auto& tc : per_trial) {
    result.mmse_mean_mse += tc.mmse_mse;
    result.mmse_mean_flops += tc.mmse_flops;
  }
  result.mmse_mean_mse /= static_cast<double>(n_trials);
  result.mmse_mean_flops /= static_cast<double>(n_trials);

  for (std::size_t d = 0; d < n_det; ++d) {
    const auto& spec = config.detectors[d];
    const bool iterative = is_iterative(spec.id);
    std::size_t length = 0;
    for (const auto& tc : per_trial) length = std::max(length, tc.curves[d].size());
    ComplexitySummary summary;
    summary.detector = spec.label;
    for (std::size_t i = 0; i < length; ++i) {
      ComplexityPoint p;
      p.detector = spec.label;
      p.iteration = iterative ? static_cast<int>(i) + 1 : 0;
      for (const auto& tc : per_trial) {
        // A trial that stopped early holds its final point.
        const auto& pt = tc.curves[d][std::min(i, tc.curves[d].size() - 1)];
        p.mean_flops += pt.first;
        p.mean_mse += pt.second;
      }
      p.mean_flops /= static_cast<double>(n_trials);
      p.mean_mse /= static_cast<double>(n_trials);
      if (!summary.reached && std::abs(p.mean_mse / result.mmse_mean_mse - 1.0) < target_rel) {
        summary.reached = true;
        summary.iterations = p.iteration;
        summary.mean_flops = p.mean_flops;
      }
      result.curve.push_back(p);
    }
    result.summary.push_back(summary);
  }
  return result;
}

void write_complexity_csv(std::ostream& out, const ComplexityResult& result) {
  out << "detector,iteration,mean_flops,mean_mse\n";
  for (const auto& p : result.curve) {
    out << p.detector << ',' << p.iteration << ',' << format_double(p.mean_flops) << ',' << format_double(p.mean_mse)
        << '\n';
  }
  out << "# target\n";
  out << "detector,reached,iterations,mean_flops,mmse_mean_flops,mmse_mean_mse,target_rel\n";
  for (const auto& s : result.summary) {
    out << s.detector << ',' << (s.reached ? 1 : 0) << ',' << s.iterations << ',' << format_double(s.mean_flops)
        << ',' << format_double(result.mmse_mean_flops) << ',' << format_double(result.mmse_mean_mse) << ','
        << format_double(result.target_rel) << '\n';
  }
}

}  // namespace gmpd::harness
