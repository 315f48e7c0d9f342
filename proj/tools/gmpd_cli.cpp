// gmpd: Monte-Carlo experiments for message-passing MIMO detection.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmpd/analysis.hpp"
#include "gmpd/harness/experiment.hpp"
#include "gmpd/reference.hpp"

namespace {

using namespace gmpd;
using namespace gmpd::harness;

enum ExitCode { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct Flags {
  Index users = 100;
  Index antennas = 600;
  std::vector<double> snr_db{20.0};
  int trials = 1;
  std::uint64_t seed = 1;
  std::vector<std::string> detectors{"mmse"};
  int max_iter = 500;
  double eps = 0.0;  // 0 selects the detector default
  std::string w_mode = "auto";
  std::string out;
  std::string format = "csv";
  bool trace_mset = false;
  bool timing = false;
  int threads = 1;
  std::vector<double> betas{0.05, 0.20, 0.9};
  double target = 0.1;
  double rel_tol = 1e-4;
};

ExperimentConfig to_config(const Flags& f) {
  ExperimentConfig c;
  c.dims = SystemDims(f.users, f.antennas);
  c.snr_grid_db = f.snr_db;
  c.trials = f.trials;
  c.master_seed = f.seed;
  c.detectors.clear();
  for (const auto& d : f.detectors) c.detectors.push_back(DetectorSpec::parse(d));
  c.max_iter = f.max_iter;
  if (f.eps != 0.0) c.eps = f.eps;
  c.w_mode = WModeSpec::parse(f.w_mode);
  c.output_path = f.out;
  c.format = f.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  c.trace_mset = f.trace_mset;
  c.record_wall_time = f.timing;
  c.threads = f.threads;
  c.validate();
  return c;
}

/// Writes through `writer` to the --out file, or stdout when none is given.
template <typename Writer>
void emit(const std::string& path, Writer&& writer) {
  if (path.empty()) {
    writer(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  writer(f);
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

nlohmann::json report_json(const ConvergenceReport& r) {
  nlohmann::json j{{"diag_dominant", r.diag_dominant},
                   {"spectral_radius", r.spectral_radius},
                   {"predicted_converges", r.predicted_converges},
                   {"beta", r.beta},
                   {"threshold_beta", r.threshold_beta}};
  j["asymptotic_radius"] = r.asymptotic_radius ? nlohmann::json(*r.asymptotic_radius) : nlohmann::json();
  return j;
}

void run_sweep(const ExperimentConfig& c) {
  const auto records = run_experiment(c);
  emit(c.output_path, [&](std::ostream& o) {
    if (c.format == OutputFormat::Json) {
      write_json(o, records);
    } else {
      write_csv(o, records);
    }
  });
  if (c.trace_mset && !c.output_path.empty()) {
    for (const auto& d : c.detectors) {
      if (d.id != "gmpid" && d.id != "sagmpid") continue;
      ExperimentConfig mc = c;
      mc.snr_grid_db = {c.snr_grid_db.front()};
      mc.detectors = {d};
      emit(c.output_path + ".mset.csv", [&](std::ostream& o) { write_mset_csv(o, run_mset_trace(mc)); });
      break;
    }
  }
}

void run_mset(const ExperimentConfig& c) {
  const auto rows = run_mset_trace(c);
  emit(c.output_path, [&](std::ostream& o) {
    if (c.format == OutputFormat::Json) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows) {
        arr.push_back({{"t", r.t},
                       {"avg_var_us", r.avg_var_us},
                       {"avg_var_su", format_double(r.avg_var_su)},
                       {"decision_var", r.decision_var},
                       {"sample_mse", r.sample_mse}});
      }
      o << arr.dump(2) << '\n';
    } else {
      write_mset_csv(o, rows);
    }
  });
}

void run_table(const ExperimentConfig& c, const Flags& f, bool detectors_given) {
  ConvergenceTableOptions opt;
  opt.snr_db = c.snr_grid_db.front();
  opt.trials = c.trials;
  opt.master_seed = c.master_seed;
  opt.max_iter = c.max_iter;
  if (c.eps) opt.eps = *c.eps;
  opt.rel_tol = f.rel_tol;
  opt.w_mode = c.w_mode;
  if (detectors_given) opt.detectors = f.detectors;
  const auto cells = run_convergence_table(f.betas, c.dims.users, opt);
  emit(c.output_path, [&](std::ostream& o) {
    if (c.format == OutputFormat::Json) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& cell : cells) {
        arr.push_back({{"beta", cell.beta},
                       {"users", cell.users},
                       {"antennas", cell.antennas},
                       {"detector", cell.detector},
                       {"converged", cell.converged},
                       {"trials", cell.trials},
                       {"median_rel_error", format_double(cell.median_rel_error)},
                       {"verdict", std::string(1, verdict_letter(cell.verdict))}});
      }
      o << arr.dump(2) << '\n';
    } else {
      write_table_csv(o, cells);
    }
  });
}

void run_complexity_cmd(const ExperimentConfig& c, const Flags& f) {
  const auto result = run_complexity(c, f.target);
  emit(c.output_path, [&](std::ostream& o) {
    if (c.format == OutputFormat::Json) {
      nlohmann::json j;
      j["mmse_mean_mse"] = result.mmse_mean_mse;
      j["mmse_mean_flops"] = result.mmse_mean_flops;
      j["target_rel"] = result.target_rel;
      j["curve"] = nlohmann::json::array();
      for (const auto& p : result.curve) {
        j["curve"].push_back(
            {{"detector", p.detector}, {"iteration", p.iteration}, {"mean_flops", p.mean_flops}, {"mean_mse", p.mean_mse}});
      }
      j["summary"] = nlohmann::json::array();
      for (const auto& s : result.summary) {
        j["summary"].push_back({{"detector", s.detector},
                                {"reached", s.reached},
                                {"iterations", s.iterations},
                                {"mean_flops", s.mean_flops}});
      }
      o << j.dump(2) << '\n';
    } else {
      write_complexity_csv(o, result);
    }
  });
}

void run_analyze(const ExperimentConfig& c) {
  const Trial tr = make_trial(c, 0, 0);
  const SystemInstance& inst = tr.instance;
  const VarianceFixedPoint fp = variance_fixed_point(inst);
  const RmtMse rmt = rmt_mmse_mse(inst.users(), inst.antennas(), 1.0, inst.noise_var());
  ConvergenceReport gm = gmpid_mean_convergence_report(inst);
  nlohmann::json j;
  j["users"] = inst.users();
  j["antennas"] = inst.antennas();
  j["snr_db"] = tr.snr_db;
  j["seed"] = tr.seed;
  j["variance_fixed_point"] = {{"sigma_hat_sq", fp.sigma_hat_sq},
                               {"sigma_tilde_sq", fp.sigma_tilde_sq},
                               {"gamma", fp.gamma},
                               {"asymptote", variance_asymptote(inst.users(), inst.antennas(), 1.0, inst.noise_var())}};
  j["rmt_mse"] = {{"exact_f", rmt.exact_f}, {"asymptotic_branch", rmt.asymptotic_branch}};
  j["gmpid"] = report_json(gm);
  if (inst.users() < inst.antennas()) {
    const WModeSpec mode = c.w_mode;
    RelaxationChoice relax;
    switch (mode.kind) {
      case WModeSpec::Kind::Auto: relax = choose_w_auto(inst, fp.gamma); break;
      case WModeSpec::Kind::Beta: relax = choose_w(inst, fp.gamma, RelaxationMode::AsymptoticBeta); break;
      case WModeSpec::Kind::Eigen: relax = choose_w(inst, fp.gamma, RelaxationMode::ExactEigen); break;
      case WModeSpec::Kind::Bound: relax = choose_w(inst, fp.gamma, RelaxationMode::GershgorinBound); break;
      case WModeSpec::Kind::Manual:
        relax = choose_w(inst, fp.gamma, RelaxationMode::Manual, mode.manual_w);
        break;
    }
    nlohmann::json sa = report_json(sagmpid_convergence_report(inst, relax));
    sa["w"] = relax.w;
    sa["w_mode"] = std::string(to_string(relax.mode));
    j["sagmpid"] = sa;
  }
  emit(c.output_path, [&](std::ostream& o) {
    if (c.format == OutputFormat::Json) {
      o << j.dump(2) << '\n';
      return;
    }
    o << "key,value\n";
    const nlohmann::json flat = j.flatten();
    for (const auto& [k, v] : flat.items()) o << k.substr(1) << ',' << v.dump() << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian message-passing MIMO detection experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key=value file; command-line flags override it");

  Flags f;
  app.add_option("--users,-K", f.users, "Number of users K")->check(CLI::PositiveNumber);
  app.add_option("--antennas,-M", f.antennas, "Number of receive antennas M")->check(CLI::PositiveNumber);
  app.add_option("--snr-db", f.snr_db, "SNR grid in dB")->delimiter(',');
  app.add_option("--trials", f.trials, "Trials per SNR point");
  app.add_option("--seed", f.seed, "Master seed");
  auto* detectors_opt = app.add_option("--detectors", f.detectors, "Detectors, e.g. mmse,gmpid:max_iter=10")->delimiter(',');
  app.add_option("--max-iter", f.max_iter, "Iteration budget of iterative detectors");
  app.add_option("--eps", f.eps, "Stopping tolerance (default depends on the detector)");
  app.add_option("--w-mode", f.w_mode, "Relaxation: auto, beta, eigen, bound or manual:<w>");
  app.add_option("--out", f.out, "Output path (default stdout)");
  app.add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--trace-mset", f.trace_mset, "sweep: also write <out>.mset.csv");
  app.add_flag("--timing", f.timing, "Record wall time per trial");
  app.add_option("--threads", f.threads, "Worker threads for trials");
  app.add_option("--betas", f.betas, "table: loads K/M")->delimiter(',');
  app.add_option("--target", f.target, "complexity: relative MSE target");
  app.add_option("--rel-tol", f.rel_tol, "table: distance to MMSE counted as converged");

  auto* sweep = app.add_subcommand("sweep", "MSE versus SNR");
  auto* mset = app.add_subcommand("mset", "Per-iteration message variance trace");
  auto* table = app.add_subcommand("table", "Convergence verdicts across loads");
  auto* complexity = app.add_subcommand("complexity", "MSE versus cumulative flops");
  auto* analyze = app.add_subcommand("analyze", "Convergence diagnostics for one instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    const ExperimentConfig c = to_config(f);
    if (sweep->parsed()) run_sweep(c);
    if (mset->parsed()) run_mset(c);
    if (table->parsed()) run_table(c, f, detectors_opt->count() > 0);
    if (complexity->parsed()) run_complexity_cmd(c, f);
    if (analyze->parsed()) run_analyze(c);
  } catch (const std::invalid_argument& e) {
    std::cerr << "gmpd: configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "gmpd: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
