#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gmpd/model.hpp"

namespace gmpd::harness {

/// Invalid experiment configuration (CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// "gmpid" or "gmpid:max_iter=10;schedule=frozen".
struct DetectorSpec {
  std::string id;
  std::map<std::string, std::string> params;
  std::string label;  // the text it was parsed from

  static DetectorSpec parse(std::string_view text);
};

const std::vector<std::string>& registered_detectors();

/// Relaxation selection for SA-GMPID: auto, beta, eigen, bound or manual:<w>.
struct WModeSpec {
  enum class Kind { Auto, Beta, Eigen, Bound, Manual };
  Kind kind = Kind::Auto;
  double manual_w = 0.0;

  static WModeSpec parse(std::string_view text);
  std::string to_string() const;
};

enum class OutputFormat { Csv, Json };

struct ExperimentConfig {
  SystemDims dims{100, 600};
  std::vector<double> snr_grid_db{20.0};
  int trials = 1;
  std::uint64_t master_seed = 1;
  std::vector<DetectorSpec> detectors{DetectorSpec::parse("mmse")};
  int max_iter = 500;
  std::optional<double> eps;
  WModeSpec w_mode;
  std::string output_path;  // empty writes to stdout
  OutputFormat format = OutputFormat::Csv;
  bool trace_mset = false;
  bool record_wall_time = false;
  int threads = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Seed of trial t at SNR index s.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t snr_index, int trial);

}  // namespace gmpd::harness
