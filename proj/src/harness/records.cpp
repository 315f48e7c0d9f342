#include "gmpd/harness/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace gmpd::harness {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::vector<AggregateRecord> aggregate(const std::vector<TrialRecord>& records) {
  std::vector<AggregateRecord> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.detector, r.snr_db);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      AggregateRecord a;
      a.detector = r.detector;
      a.snr_db = r.snr_db;
      out.push_back(a);
    }
    AggregateRecord& a = out[it->second];
    ++a.trials;
    a.mean_mse += r.mse;
    a.mean_iterations += r.iterations;
    a.mean_flops += static_cast<double>(r.flops);
    if (r.terminated == Termination::Converged || r.terminated == Termination::Exact) ++a.converged;
  }
  for (auto& a : out) {
    a.mean_mse /= a.trials;
    a.mean_iterations /= a.trials;
    a.mean_flops /= a.trials;
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.detector << ',' << format_double(r.snr_db) << ',' << r.trial << ',' << r.seed << ','
        << format_double(r.mse) << ',' << r.iterations << ',' << r.flops << ',' << to_string(r.terminated) << ','
        << r.wall_time_ns << '\n';
  }
  if (records.empty()) return;
  out << "# aggregate\n" << kAggregateHeader << '\n';
  for (const auto& a : aggregate(records)) {
    out << a.detector << ',' << format_double(a.snr_db) << ',' << a.trials << ',' << format_double(a.mean_mse)
        << ',' << format_double(a.mean_iterations) << ',' << format_double(a.mean_flops) << ',' << a.converged
        << '\n';
  }
}

namespace {

json number_or_text(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double read_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    throw std::runtime_error("read_json: bad number '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

void write_json(std::ostream& out, const std::vector<TrialRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    arr.push_back({{"detector", r.detector},
                   {"snr_db", r.snr_db},
                   {"trial", r.trial},
                   {"seed", r.seed},
                   {"mse", number_or_text(r.mse)},
                   {"iterations", r.iterations},
                   {"flops", r.flops},
                   {"terminated", std::string(to_string(r.terminated))},
                   {"wall_time_ns", r.wall_time_ns}});
  }
  out << arr.dump(2) << '\n';
}

std::vector<TrialRecord> read_json(std::istream& in) {
  const json arr = json::parse(in);
  if (!arr.is_array()) throw std::runtime_error("read_json: expected an array");
  std::vector<TrialRecord> out;
  for (const auto& j : arr) {
    TrialRecord r;
    r.detector = j.at("detector").get<std::string>();
    r.snr_db = j.at("snr_db").get<double>();
    r.trial = j.at("trial").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mse = read_number(j.at("mse"));
    r.iterations = j.at("iterations").get<int>();
    r.flops = j.at("flops").get<std::uint64_t>();
    r.terminated = termination_from_string(j.at("terminated").get<std::string>());
    r.wall_time_ns = j.at("wall_time_ns").get<std::int64_t>();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {
template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  writer(f);
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}
}  // namespace

void emit_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  write_file(path, [&](std::ostream& o) { write_csv(o, records); });
}

void emit_json(const std::vector<TrialRecord>& records, const std::string& path) {
  write_file(path, [&](std::ostream& o) { write_json(o, records); });
}

}  // namespace gmpd::harness
