#include "decoshield/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "decoshield/errors.hpp"

namespace decoshield::report {

using nlohmann::json;

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Provenance make_provenance(const std::string& scenario, const json& config, std::uint64_t seed) {
  Provenance p;
  p.scenario = scenario;
  p.config_hash = fnv1a_hex(config.dump());
  p.seed = seed;
  p.eigen_version = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION);
  p.json_version = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                   "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return p;
}

namespace {

// Non-finite values serialize as null and parse back as NaN.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double get(const json& j, const char* key) {
  const json& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json series(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> series_from(const json& a) {
  std::vector<double> out;
  for (const auto& x : a) out.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  return out;
}

}  // namespace

json to_json(const Report& r) {
  json j;
  if (r.dd) {
    j["dd"] = {{"residual", num(r.dd->residual)},
               {"periodicity_defect", num(r.dd->periodicity_defect)},
               {"zero_mode_norm", num(r.dd->zero_mode_norm)},
               {"tolerance", num(r.dd->tolerance)},
               {"verdict", r.dd->verdict ? "pass" : "fail"},
               {"residual_verdict", r.dd->residual_verdict ? "pass" : "fail"},
               {"mu", num(r.mu)},
               {"period", num(r.period)},
               {"d_parameter", num(r.d_parameter)}};
  } else {
    j["dd"] = nullptr;
  }
  if (r.rates) {
    const auto& s = r.rates->summary;
    if (!r.rates->skipped.empty()) {
      j["rates"] = {{"skipped", r.rates->skipped}};
    } else {
      j["rates"] = {{"xi", num(s.xi)},
                    {"xi_first_power", num(r.rates->xi_first_power)},
                    {"t_dec", num(s.t_dec)},
                    {"c_const", num(s.c_const)},
                    {"d_parameter", num(s.d_parameter)},
                    {"theorem_horizon", num(s.theorem_horizon)},
                    {"lambda", num(s.lambda)},
                    {"period", num(s.period)},
                    {"improvement_ratio", num(s.improvement_ratio)},
                    {"improves_on_general", s.improves_on_general},
                    {"small_period_ratio", num(s.small_period_ratio)},
                    {"k_used", r.rates->k_used},
                    {"tail_estimate", num(r.rates->tail_estimate)},
                    {"truncation_converged", r.rates->truncation_converged},
                    {"level_shifts", series(r.rates->level_shifts)}};
    }
  } else {
    j["rates"] = nullptr;
  }
  json runs = json::object();
  for (const auto& run : r.runs) {
    runs[run.name] = {{"method", run.method},
                      {"step", num(run.step)},
                      {"final_time", num(run.final_time)},
                      {"final_retention", num(run.final_retention)},
                      {"sup_deviation", num(run.sup_deviation)},
                      {"max_population_drift", num(run.max_population_drift)},
                      {"max_trace_drift", num(run.max_trace_drift)},
                      {"times", series(run.times)},
                      {"retention", series(run.retention)},
                      {"deviation", series(run.deviation)},
                      {"bound_shape", series(run.bound)}};
  }
  j["runs"] = runs;
  if (r.sweep) {
    json rows = json::array();
    for (const auto& row : r.sweep->rows) {
      rows.push_back({{"value", num(row.value)},
                      {"xi", num(row.xi)},
                      {"t_dec", num(row.t_dec)},
                      {"retention", num(row.retention)},
                      {"sup_deviation", num(row.sup_deviation)},
                      {"dd_pass", row.dd_pass}});
    }
    j["sweep"] = {{"axis", r.sweep->axis}, {"rows", rows}};
  } else {
    j["sweep"] = nullptr;
  }
  const auto& p = r.provenance;
  j["provenance"] = {{"scenario", p.scenario},   {"config_hash", p.config_hash},
                     {"seed", p.seed},           {"version", p.version},
                     {"eigen", p.eigen_version}, {"nlohmann_json", p.json_version}};
  return j;
}

Report from_json(const json& j) {
  Report r;
  if (!j.at("dd").is_null()) {
    const json& d = j.at("dd");
    control::DDReport dd;
    dd.residual = get(d, "residual");
    dd.periodicity_defect = get(d, "periodicity_defect");
    dd.zero_mode_norm = get(d, "zero_mode_norm");
    dd.tolerance = get(d, "tolerance");
    dd.verdict = d.at("verdict") == "pass";
    dd.residual_verdict = d.at("residual_verdict") == "pass";
    r.dd = dd;
    r.mu = get(d, "mu");
    r.period = get(d, "period");
    r.d_parameter = get(d, "d_parameter");
  }
  if (!j.at("rates").is_null()) {
    const json& a = j.at("rates");
    RatesBlock b;
    if (a.contains("skipped")) {
      b.skipped = a.at("skipped").get<std::string>();
    } else {
      b.summary.xi = get(a, "xi");
      b.xi_first_power = get(a, "xi_first_power");
      b.summary.t_dec = get(a, "t_dec");
      b.summary.c_const = get(a, "c_const");
      b.summary.d_parameter = get(a, "d_parameter");
      b.summary.theorem_horizon = get(a, "theorem_horizon");
      b.summary.lambda = get(a, "lambda");
      b.summary.period = get(a, "period");
      b.summary.improvement_ratio = get(a, "improvement_ratio");
      b.summary.improves_on_general = a.at("improves_on_general").get<bool>();
      b.summary.small_period_ratio = get(a, "small_period_ratio");
      b.k_used = a.at("k_used").get<int>();
      b.tail_estimate = get(a, "tail_estimate");
      b.truncation_converged = a.at("truncation_converged").get<bool>();
      b.level_shifts = series_from(a.at("level_shifts"));
    }
    r.rates = b;
  }
  for (const auto& [name, v] : j.at("runs").items()) {
    RunSummary run;
    run.name = name;
    run.method = v.at("method").get<std::string>();
    run.step = get(v, "step");
    run.final_time = get(v, "final_time");
    run.final_retention = get(v, "final_retention");
    run.sup_deviation = get(v, "sup_deviation");
    run.max_population_drift = get(v, "max_population_drift");
    run.max_trace_drift = get(v, "max_trace_drift");
    run.times = series_from(v.at("times"));
    run.retention = series_from(v.at("retention"));
    run.deviation = series_from(v.at("deviation"));
    run.bound = series_from(v.at("bound_shape"));
    r.runs.push_back(std::move(run));
  }
  if (!j.at("sweep").is_null()) {
    SweepTable s;
    s.axis = j.at("sweep").at("axis").get<std::string>();
    for (const auto& row : j.at("sweep").at("rows")) {
      s.rows.push_back({get(row, "value"), get(row, "xi"), get(row, "t_dec"), get(row, "retention"),
                        get(row, "sup_deviation"), row.at("dd_pass").get<bool>()});
    }
    r.sweep = s;
  }
  const json& p = j.at("provenance");
  r.provenance.scenario = p.at("scenario").get<std::string>();
  r.provenance.config_hash = p.at("config_hash").get<std::string>();
  r.provenance.seed = p.at("seed").get<std::uint64_t>();
  r.provenance.version = p.at("version").get<std::string>();
  r.provenance.eigen_version = p.at("eigen").get<std::string>();
  r.provenance.json_version = p.at("nlohmann_json").get<std::string>();
  return r;
}

std::string markdown_summary(const Report& r) {
  std::ostringstream os;
  os << "# " << r.provenance.scenario << "\n\n";
  os << "| quantity | value |\n|---|---|\n";
  if (r.dd) {
    os << "| DD verdict | " << (r.dd->verdict ? "pass" : "fail") << " |\n";
    os << "| DD zero-mode norm | " << format_number(r.dd->zero_mode_norm) << " |\n";
    os << "| DD residual | " << format_number(r.dd->residual) << " |\n";
    os << "| mu | " << format_number(r.mu) << " |\n";
    os << "| T | " << format_number(r.period) << " |\n";
  }
  if (r.rates && r.rates->skipped.empty()) {
    os << "| xi(T) | " << format_number(r.rates->summary.xi) << " |\n";
    os << "| t_dec | " << format_number(r.rates->summary.t_dec) << " |\n";
    os << "| theorem horizon | " << format_number(r.rates->summary.theorem_horizon) << " |\n";
  } else if (r.rates) {
    os << "| rates | skipped: " << r.rates->skipped << " |\n";
  }
  for (const auto& run : r.runs) {
    os << "| retention (" << run.name << ", t = " << format_number(run.final_time) << ") | "
       << format_number(run.final_retention) << " |\n";
    os << "| sup deviation (" << run.name << ") | " << format_number(run.sup_deviation) << " |\n";
  }
  if (r.sweep) {
    os << "\n## Sweep over " << r.sweep->axis << "\n\n";
    os << "| " << r.sweep->axis << " | xi | t_dec | retention | sup deviation | DD |\n|---|---|---|---|---|---|\n";
    for (const auto& row : r.sweep->rows) {
      os << "| " << format_number(row.value) << " | " << format_number(row.xi) << " | " << format_number(row.t_dec)
         << " | " << format_number(row.retention) << " | " << format_number(row.sup_deviation) << " | "
         << (row.dd_pass ? "pass" : "fail") << " |\n";
    }
  }
  os << "\nconfig " << r.provenance.config_hash << ", seed " << r.provenance.seed << ", version "
     << r.provenance.version << "\n";
  return os.str();
}

std::string runs_csv(const Report& r) {
  std::ostringstream os;
  os << kRunsCsvHeader << "\n";
  for (const auto& run : r.runs) {
    os << run.name << "," << run.method << "," << format_number(run.final_time) << ","
       << format_number(run.final_retention) << "," << format_number(run.sup_deviation) << ","
       << format_number(run.max_population_drift) << "," << format_number(run.max_trace_drift) << "\n";
  }
  return os.str();
}

std::string sweep_csv(const SweepTable& s) {
  std::ostringstream os;
  os << kSweepCsvHeader << "\n";
  for (const auto& row : s.rows) {
    os << format_number(row.value) << "," << format_number(row.xi) << "," << format_number(row.t_dec) << ","
       << format_number(row.retention) << "," << format_number(row.sup_deviation) << "," << (row.dd_pass ? 1 : 0)
       << "\n";
  }
  return os.str();
}

Format parse_format(const std::string& name) {
  if (name == "json") return Format::json;
  if (name == "csv") return Format::csv;
  if (name == "markdown" || name == "md") return Format::markdown;
  throw ArgumentError("unknown report format '" + name + "' (json, csv, markdown)");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::filesystem::path> emit_report(const Report& r, Format format, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  switch (format) {
    case Format::json:
      written.push_back(dir / "report.json");
      write_file(written.back(), to_json(r).dump(2) + "\n");
      break;
    case Format::csv:
      written.push_back(dir / "runs.csv");
      write_file(written.back(), runs_csv(r));
      if (r.sweep) {
        written.push_back(dir / "sweep.csv");
        write_file(written.back(), sweep_csv(*r.sweep));
      }
      break;
    case Format::markdown:
      written.push_back(dir / "summary.md");
      write_file(written.back(), markdown_summary(r));
      break;
  }
  return written;
}

}  // namespace decoshield::report
