#pragma once

// Experiment report: DD verdict, rate summary, per-run deviation summaries,
// sweep table and provenance, with deterministic JSON / CSV / Markdown output.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoshield/control.hpp"
#include "decoshield/exactsim.hpp"
#include "decoshield/weakcoupling.hpp"

namespace decoshield::report {

inline constexpr const char* kVersion = "0.1.0";

struct RatesBlock {
  weakcoupling::RateSummary summary;
  double xi_first_power = 0.0;
  int k_used = 0;
  double tail_estimate = 0.0;
  bool truncation_converged = false;
  std::vector<double> level_shifts;  // <phi_k, S phi_k>
  std::string skipped;               // reason when rates were not computed
};

struct RunSummary {
  std::string name;  // "on" or "off"
  std::string method;
  double step = 0.0;
  double final_time = 0.0;
  double final_retention = 0.0;
  double sup_deviation = 0.0;
  double max_population_drift = 0.0;
  double max_trace_drift = 0.0;
  std::vector<double> times;
  std::vector<double> retention;
  std::vector<double> deviation;
  std::vector<double> bound;
};

struct SweepRow {
  double value = 0.0;
  double xi = 0.0;
  double t_dec = 0.0;
  double retention = 0.0;
  double sup_deviation = 0.0;
  bool dd_pass = false;
};

struct SweepTable {
  std::string axis;
  std::vector<SweepRow> rows;
};

struct Provenance {
  std::string scenario;
  std::string config_hash;  // FNV-1a 64 of the canonical config JSON
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string eigen_version;
  std::string json_version;
};

struct Report {
  std::optional<control::DDReport> dd;
  double mu = 0.0;
  double period = 0.0;
  double d_parameter = 0.0;
  std::optional<RatesBlock> rates;
  std::vector<RunSummary> runs;
  std::optional<SweepTable> sweep;
  Provenance provenance;
};

std::string fnv1a_hex(const std::string& text);
Provenance make_provenance(const std::string& scenario, const nlohmann::json& config, std::uint64_t seed);

nlohmann::json to_json(const Report& r);
Report from_json(const nlohmann::json& j);

// Markdown summary: DD verdict, xi(T), t_dec and retention ratios.
std::string markdown_summary(const Report& r);

inline constexpr const char* kRunsCsvHeader =
    "run,method,final_time,final_retention,sup_deviation,max_population_drift,max_trace_drift";
inline constexpr const char* kSweepCsvHeader = "value,xi,t_dec,retention,sup_deviation,dd_pass";
std::string runs_csv(const Report& r);
std::string sweep_csv(const SweepTable& s);

enum class Format { json, csv, markdown };
Format parse_format(const std::string& name);

// Writes report.json, runs.csv (+ sweep.csv) or summary.md into `dir` and
// returns the written paths. Throws std::runtime_error on I/O failure.
std::vector<std::filesystem::path> emit_report(const Report& r, Format format, const std::filesystem::path& dir);

// Writes `text` to `path`, throwing on failure.
void write_file(const std::filesystem::path& path, const std::string& text);

// printf("%.17g").
std::string format_number(double x);

}  // namespace decoshield::report
