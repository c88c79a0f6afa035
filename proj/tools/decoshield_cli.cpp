#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "decoshield/experiment.hpp"

namespace ex = decoshield::experiment;
namespace rp = decoshield::report;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string scenario;
  std::string out;
  std::string format = "json";
  long long seed = -1;
};

ex::ExperimentConfig load(const Common& c) {
  if (!c.config.empty() && !c.scenario.empty()) throw ex::ConfigError("<cli>", "--config and --scenario are exclusive");
  ex::ExperimentConfig cfg =
      c.config.empty()
          ? ex::parse_config(ex::builtin_scenario(c.scenario.empty() ? "spin-fermion-sinusoidal" : c.scenario))
          : ex::load_config(c.config);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (!c.out.empty()) cfg.output_directory = c.out;
  return cfg;
}

// Prints a flat object as JSON, "key,value" CSV or a Markdown table.
void print_flat(const json& obj, rp::Format format) {
  switch (format) {
    case rp::Format::json:
      std::cout << obj.dump(2) << "\n";
      break;
    case rp::Format::csv:
      std::cout << "key,value\n";
      for (const auto& [k, v] : obj.items()) std::cout << k << "," << (v.is_number() ? rp::format_number(v.get<double>()) : v.dump()) << "\n";
      break;
    case rp::Format::markdown:
      std::cout << "| key | value |\n|---|---|\n";
      for (const auto& [k, v] : obj.items()) std::cout << "| " << k << " | " << (v.is_number() ? rp::format_number(v.get<double>()) : v.dump()) << " |\n";
      break;
  }
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json dd_json(const decoshield::control::DDReport& dd, const decoshield::control::ControlSchedule& s) {
  return {{"verdict", dd.verdict ? "pass" : "fail"},
          {"residual_verdict", dd.residual_verdict ? "pass" : "fail"},
          {"zero_mode_norm", num(dd.zero_mode_norm)},
          {"periodicity_defect", num(dd.periodicity_defect)},
          {"residual", num(dd.residual)},
          {"tolerance", num(dd.tolerance)},
          {"mu", num(s.amplitude())},
          {"period", num(s.period())}};
}

int cmd_check_dd(const Common& c) {
  const auto cfg = load(c);
  const auto setup = ex::prepare(cfg);
  const auto dd = decoshield::control::check_dd(setup.model, setup.schedule);
  print_flat(dd_json(dd, setup.schedule), rp::parse_format(c.format));
  return dd.verdict ? ex::kExitOk : ex::kExitDD;
}

int cmd_tune(const Common& c) {
  auto cfg = load(c);
  cfg.schedule.amplitude.reset();
  const auto setup = ex::prepare(cfg);
  if (!setup.tuning) throw ex::ConfigError("schedule.kind", "only smooth schedules have a tunable amplitude");
  const auto& t = *setup.tuning;
  print_flat({{"mu", t.mu}, {"zero_mode_norm", t.zero_mode_norm}, {"surrogate", t.surrogate}, {"evaluations", t.evaluations}},
             rp::parse_format(c.format));
  return ex::kExitOk;
}

int cmd_fourier(const Common& c, int cutoff) {
  const auto cfg = load(c);
  const auto setup = ex::prepare(cfg);
  const auto table = decoshield::control::fourier_modes(setup.model, setup.schedule, cutoff);
  const auto format = rp::parse_format(c.format);
  json rows = json::array();
  for (const auto& [k, m] : table.modes) {
    json row = {{"k", k}, {"norm", decoshield::core::op_norm(m)}};
    if (table.has_ladder()) {
      row["norm_minus"] = decoshield::core::op_norm(table.ladder_mode(k, -1));
      row["norm_plus"] = decoshield::core::op_norm(table.ladder_mode(k, 1));
    }
    rows.push_back(row);
  }
  if (format == rp::Format::json) {
    std::cout << json{{"cutoff", table.cutoff},
                      {"period", table.period},
                      {"parseval_defect", table.parseval_defect},
                      {"tail_bound", table.tail_bound},
                      {"modes", rows}}
                     .dump(2)
              << "\n";
    return ex::kExitOk;
  }
  const bool md = format == rp::Format::markdown;
  const char* sep = md ? " | " : ",";
  std::cout << (md ? "| " : "") << "k" << sep << "norm";
  if (table.has_ladder()) std::cout << sep << "norm_minus" << sep << "norm_plus";
  std::cout << (md ? " |\n" : "\n");
  if (md) std::cout << (table.has_ladder() ? "|---|---|---|---|\n" : "|---|---|\n");
  for (const auto& row : rows) {
    std::cout << (md ? "| " : "") << row["k"].get<int>() << sep << rp::format_number(row["norm"]);
    if (table.has_ladder()) {
      std::cout << sep << rp::format_number(row["norm_minus"]) << sep << rp::format_number(row["norm_plus"]);
    }
    std::cout << (md ? " |\n" : "\n");
  }
  return ex::kExitOk;
}

int cmd_rates(const Common& c) {
  const auto cfg = load(c);
  const auto setup = ex::prepare(cfg);
  const auto r = ex::compute_rates(cfg, setup);
  if (!r.skipped.empty()) {
    std::cerr << "rates skipped: " << r.skipped << "\n";
    return r.skipped == "DD condition violated" ? ex::kExitDD : ex::kExitNumeric;
  }
  const auto& s = r.summary;
  print_flat({{"xi", num(s.xi)},
              {"xi_first_power", num(r.xi_first_power)},
              {"t_dec", num(s.t_dec)},
              {"theorem_horizon", num(s.theorem_horizon)},
              {"improvement_ratio", num(s.improvement_ratio)},
              {"improves_on_general", s.improves_on_general},
              {"lambda", num(s.lambda)},
              {"period", num(s.period)},
              {"d_parameter", num(s.d_parameter)},
              {"k_used", r.k_used},
              {"tail_estimate", num(r.tail_estimate)},
              {"truncation_converged", r.truncation_converged}},
             rp::parse_format(c.format));
  return ex::kExitOk;
}

int cmd_simulate(const Common& c, const std::string& control) {
  const auto cfg = load(c);
  const auto setup = ex::prepare(cfg);
  const bool on = control == "on";
  const auto schedule = on ? setup.schedule : decoshield::control::ControlSchedule::none(cfg.schedule.period, setup.model.dim());
  decoshield::exactsim::TotalModel tm{setup.model, setup.modes, cfg.lambda, schedule};
  const auto traj = decoshield::exactsim::evolve(tm, ex::initial_state(cfg), cfg.run.horizon, cfg.run.sample_dt,
                                                 ex::evolve_options(cfg));
  const std::filesystem::path dir = cfg.output_directory;
  std::filesystem::create_directories(dir);
  const auto path = dir / ("trajectory_" + control + ".csv");
  std::ostringstream os;
  decoshield::exactsim::write_csv(traj, os);
  rp::write_file(path, os.str());
  std::cout << path.string() << "\n";
  return ex::kExitOk;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::vector<double>& values, bool rates_only) {
  const auto cfg = load(c);
  ex::SweepOptions opt;
  opt.simulate = !rates_only;
  rp::Report rep;
  rep.sweep = ex::sweep(cfg, axis, values, opt);
  rep.provenance = rp::make_provenance(cfg.scenario, ex::to_json(cfg), cfg.seed);
  for (const auto& p : rp::emit_report(rep, rp::parse_format(c.format), cfg.output_directory)) std::cout << p.string() << "\n";
  return ex::kExitOk;
}

int cmd_compare(const Common& c) {
  const auto cfg = load(c);
  const auto outcome = ex::run_experiment(cfg);
  if (outcome.exit_code == ex::kExitOk) {
    std::cout << outcome.message << "\n";
    for (const auto& p : outcome.files) std::cout << p.string() << "\n";
  } else {
    std::cerr << outcome.message << "\n";
  }
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamical decoupling of a driven qubit coupled to a fermionic reservoir"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config (JSON)");
    sub->add_option("--scenario", common.scenario, "Built-in scenario name");
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", common.seed, "Seed (overrides the config)");
    sub->add_option("--format", common.format, "json, csv or markdown")->check(CLI::IsMember({"json", "csv", "markdown"}));
  };
  auto* check_dd = app.add_subcommand("check-dd", "Check the DD condition");
  auto* tune = app.add_subcommand("tune-mu", "Tune the control amplitude to the DD condition");
  auto* fourier = app.add_subcommand("fourier", "Fourier modes of Q(t)");
  int cutoff = 16;
  fourier->add_option("--cutoff", cutoff, "Largest |k|")->check(CLI::Range(1, 2047));
  auto* rates = app.add_subcommand("rates", "Level shift, xi(T) and t_dec");
  auto* simulate = app.add_subcommand("simulate", "Exact reduced trajectory");
  std::string control = "on";
  simulate->add_option("--control", control, "on or off")->check(CLI::IsMember({"on", "off"}));
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep");
  std::string axis;
  std::vector<double> values;
  bool rates_only = false;
  sweep->add_option("--axis", axis, "lambda, T, mu or N")->required();
  sweep->add_option("--values", values, "Values along the axis")->required()->delimiter(',');
  sweep->add_flag("--rates-only", rates_only, "Skip the simulations");
  auto* compare = app.add_subcommand("compare", "check-dd, rates, DD-on and DD-off runs, comparison and report");
  for (auto* sub : {check_dd, tune, fourier, rates, simulate, sweep, compare}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kExitConfig;
  }

  try {
    if (*check_dd) return cmd_check_dd(common);
    if (*tune) return cmd_tune(common);
    if (*fourier) return cmd_fourier(common, cutoff);
    if (*rates) return cmd_rates(common);
    if (*simulate) return cmd_simulate(common, control);
    if (*sweep) return cmd_sweep(common, axis, values, rates_only);
    if (*compare) return cmd_compare(common);
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ex::kExitConfig;
  } catch (const decoshield::SearchFailure& e) {
    std::cerr << e.what() << "\n" << e.scan_trace() << "\n";
    return ex::kExitDD;
  } catch (const decoshield::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return ex::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ex::kExitNumeric;
  }
  return ex::kExitOk;
}
