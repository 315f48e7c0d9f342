#include "gmpd/harness/detectors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "gmpd/classic.hpp"
#include "gmpd/gmpid.hpp"
#include "gmpd/harness/records.hpp"
#include "gmpd/reference.hpp"
#include "gmpd/sagmpid.hpp"

namespace gmpd::harness {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(std::string(what) + ": '" + s + "' is not a number");
  }
  return v;
}

int parse_int(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(std::string(what) + ": '" + s + "' is not an integer");
  }
  return v;
}

const std::set<std::string>& allowed_params(const std::string& id) {
  static const std::set<std::string> none;
  static const std::set<std::string> affine{"max_iter", "eps"};
  static const std::set<std::string> richardson{"max_iter", "eps", "omega"};
  static const std::set<std::string> gmpid{"max_iter", "eps", "schedule"};
  static const std::set<std::string> sagmpid{"max_iter", "eps", "schedule", "w"};
  if (id == "jacobi") return affine;
  if (id == "richardson") return richardson;
  if (id == "gmpid") return gmpid;
  if (id == "sagmpid") return sagmpid;
  return none;
}

VarianceSchedule parse_schedule(const std::string& s) {
  if (s == "interleaved") return VarianceSchedule::Interleaved;
  if (s == "frozen") return VarianceSchedule::Frozen;
  throw ConfigError("schedule must be interleaved or frozen, got '" + s + "'");
}

RelaxationChoice relaxation_for(const WModeSpec& mode, const SystemInstance& inst) {
  const double gamma = variance_fixed_point(inst).gamma;
  switch (mode.kind) {
    case WModeSpec::Kind::Auto: return choose_w_auto(inst, gamma);
    case WModeSpec::Kind::Beta: return choose_w(inst, gamma, RelaxationMode::AsymptoticBeta);
    case WModeSpec::Kind::Eigen: return choose_w(inst, gamma, RelaxationMode::ExactEigen);
    case WModeSpec::Kind::Bound: return choose_w(inst, gamma, RelaxationMode::GershgorinBound);
    case WModeSpec::Kind::Manual: return choose_w(inst, gamma, RelaxationMode::Manual, mode.manual_w);
  }
  throw ConfigError("unknown w mode");
}

}  // namespace

// --- parsing -----------------------------------------------------------------

const std::vector<std::string>& registered_detectors() {
  static const std::vector<std::string> ids{"mf", "if", "gmp", "mmse", "jacobi", "richardson", "gmpid", "sagmpid"};
  return ids;
}

DetectorSpec DetectorSpec::parse(std::string_view text) {
  DetectorSpec spec;
  spec.label = trim(text);
  const auto colon = spec.label.find(':');
  spec.id = trim(std::string_view(spec.label).substr(0, colon));
  const auto& ids = registered_detectors();
  if (std::find(ids.begin(), ids.end(), spec.id) == ids.end()) {
    throw ConfigError("unknown detector '" + spec.id + "'");
  }
  if (colon == std::string::npos) return spec;

  const auto& allowed = allowed_params(spec.id);
  std::string_view rest = std::string_view(spec.label).substr(colon + 1);
  while (!rest.empty()) {
    const auto sep = rest.find(';');
    const std::string_view item = rest.substr(0, sep);
    rest = sep == std::string_view::npos ? std::string_view{} : rest.substr(sep + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("detector parameter '" + std::string(item) + "' needs key=value");
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    if (!allowed.count(key)) throw ConfigError("detector '" + spec.id + "' has no parameter '" + key + "'");
    spec.params[key] = value;
  }
  return spec;
}

WModeSpec WModeSpec::parse(std::string_view text) {
  const std::string s = trim(text);
  WModeSpec m;
  if (s == "auto") {
    m.kind = Kind::Auto;
  } else if (s == "beta") {
    m.kind = Kind::Beta;
  } else if (s == "eigen") {
    m.kind = Kind::Eigen;
  } else if (s == "bound") {
    m.kind = Kind::Bound;
  } else if (s.rfind("manual:", 0) == 0) {
    m.kind = Kind::Manual;
    m.manual_w = parse_double(std::string_view(s).substr(7), "manual w");
    if (!(m.manual_w > 0.0)) throw ConfigError("manual w must be positive");
  } else {
    try {
      m.manual_w = parse_double(s, "w");
    } catch (const ConfigError&) {
      throw ConfigError("w mode must be auto, beta, eigen, bound or manual:<w>, got '" + s + "'");
    }
    m.kind = Kind::Manual;
    if (!(m.manual_w > 0.0)) throw ConfigError("manual w must be positive");
  }
  return m;
}

std::string WModeSpec::to_string() const {
  switch (kind) {
    case Kind::Auto: return "auto";
    case Kind::Beta: return "beta";
    case Kind::Eigen: return "eigen";
    case Kind::Bound: return "bound";
    case Kind::Manual: return "manual:" + format_double(manual_w);
  }
  return "auto";
}

void ExperimentConfig::validate() const {
  if (dims.users < 1 || dims.antennas < 1) throw ConfigError("users and antennas must be >= 1");
  if (snr_grid_db.empty()) throw ConfigError("snr grid must not be empty");
  for (double s : snr_grid_db) {
    if (!std::isfinite(s)) throw ConfigError("snr values must be finite");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (detectors.empty()) throw ConfigError("at least one detector is required");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (eps && !(*eps > 0.0)) throw ConfigError("eps must be positive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (const auto& d : detectors) {
    for (const auto& [key, value] : d.params) {
      if (key == "max_iter" && parse_int(value, key) < 1) throw ConfigError(d.label + ": max_iter must be >= 1");
      if (key == "eps" && !(parse_double(value, key) > 0.0)) throw ConfigError(d.label + ": eps must be positive");
      if (key == "omega" && !(parse_double(value, key) > 0.0)) throw ConfigError(d.label + ": omega must be positive");
      if (key == "schedule") parse_schedule(value);
      if (key == "w") WModeSpec::parse(value);
    }
  }
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t snr_index, int trial) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(snr_index), static_cast<std::uint64_t>(trial));
}

// --- running -----------------------------------------------------------------

bool is_iterative(std::string_view id) {
  return id == "jacobi" || id == "richardson" || id == "gmpid" || id == "sagmpid";
}

DetectorRun run_detector(const DetectorSpec& spec, const SystemInstance& inst, const Vector& y,
                         const RunSettings& settings) {
  const auto param = [&](const char* key) -> const std::string* {
    const auto it = spec.params.find(key);
    return it == spec.params.end() ? nullptr : &it->second;
  };
  int max_iter = settings.max_iter;
  std::optional<double> eps = settings.eps;
  if (const auto* v = param("max_iter")) max_iter = parse_int(*v, "max_iter");
  if (const auto* v = param("eps")) eps = parse_double(*v, "eps");

  DetectorRun run;
  const std::string& id = spec.id;
  if (id == "mmse") {
    run.result = mmse_detect(inst, y);
  } else if (id == "mf") {
    run.result = matched_filter_detect(inst, y);
  } else if (id == "if") {
    run.result = inverse_filter_detect(inst, y);
  } else if (id == "gmp") {
    run.result = gmp_block_detect(inst, y);
  } else if (id == "jacobi" || id == "richardson") {
    std::optional<double> omega;
    if (const auto* v = param("omega")) omega = parse_double(*v, "omega");
    const AffineIteration iter = id == "jacobi" ? jacobi_for_mmse(inst, y) : richardson_for_mmse(inst, y, omega);
    const double tol = eps.value_or(1e-8 * (1.0 + iter.c.lpNorm<Eigen::Infinity>()));
    run.result = run_affine_detector(iter, tol, max_iter, settings.probe, settings.record_trace ? &run.trace : nullptr);
  } else if (id == "gmpid" || id == "sagmpid") {
    GmpidOptions opt;
    opt.eps = eps;
    opt.max_iter = max_iter;
    opt.probe = settings.probe;
    opt.record_trace = settings.record_trace;
    if (const auto* v = param("schedule")) opt.schedule = parse_schedule(*v);
    GmpidOutput out;
    if (id == "gmpid") {
      out = gmpid_detect(inst, y, opt);
    } else {
      WModeSpec mode = settings.w_mode;
      if (const auto* v = param("w")) mode = WModeSpec::parse(*v);
      out = sagmpid_detect(inst, y, relaxation_for(mode, inst), opt);
    }
    run.result = std::move(out.result);
    run.trace = std::move(out.trace);
  } else {
    throw ConfigError("unknown detector '" + id + "'");
  }
  return run;
}

}  // namespace gmpd::harness
