#pragma once

// Config-driven experiments: parsing and validating a scenario, the
// check-dd -> rates -> simulate(on) -> simulate(off) -> compare pipeline,
// and parameter sweeps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoshield/control.hpp"
#include "decoshield/errors.hpp"
#include "decoshield/exactsim.hpp"
#include "decoshield/report.hpp"
#include "decoshield/reservoir.hpp"
#include "decoshield/weakcoupling.hpp"

namespace decoshield::experiment {

using core::ComplexMatrix;

// Invalid configuration; `path` is the dotted key path of the offending field.
class ConfigError : public ArgumentError {
 public:
  ConfigError(std::string path, const std::string& message)
      : ArgumentError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ScheduleSpec {
  std::string kind = "sinusoidal";  // sinusoidal | smooth | bangbang | none
  double period = 0.1;
  std::optional<double> amplitude;  // empty: tune within tune_bracket
  std::array<double, 2> tune_bracket{6.0, 9.0};
  double profile_c0 = 0.0;
  std::vector<double> profile_cos{1.0};
  std::vector<double> profile_sin;
  ComplexMatrix direction;  // empty: sigma_z
  std::vector<control::Kick> kicks;
};

struct ReservoirSpec {
  std::string form_factor = "gaussian-p";
  double amplitude = 1.0;
  double width = 1.0;
  double beta = 1.0;
  int modes = 8;
  double p_max = 6.0;
  double r_max = 10.0;
};

struct RunSpec {
  double horizon = 50.0;
  double sample_dt = 0.5;
  ComplexMatrix initial_state;  // empty: |+><+|
  std::string method = "auto";  // auto | density | unravel
  int samples = 256;
  double step = 0.0;
  bool require_dd = true;
};

struct ExperimentConfig {
  std::string scenario = "custom";
  std::uint64_t seed = 0;
  ComplexMatrix hs;
  ComplexMatrix q;
  ScheduleSpec schedule;
  ReservoirSpec reservoir;
  double lambda = 0.05;
  RunSpec run;
  double c_const = 1.0;
  double big_c_const = 1.0;
  bool xi_first_power = false;
  std::string output_directory = "out";
};

// Parses a config document, rejecting unknown keys and ill-typed values, and
// runs validate(). Missing keys take the defaults above.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every precondition of the pipeline: Hermitian H_s and Q, T |H_s| < pi/2,
// [H_s, H_c(t)] = 0, d 2^N <= 2^14, a valid initial state, known form factor,
// positive horizon and sampling step. Throws ConfigError.
void validate(const ExperimentConfig& cfg);

// Canonical (normalized, defaults filled in) JSON form; its hash identifies
// the run in the report provenance.
nlohmann::json to_json(const ExperimentConfig& cfg);

std::vector<std::string> builtin_scenarios();
// Throws ArgumentError for unknown names.
nlohmann::json builtin_scenario(const std::string& name);

// Model, schedule (with the amplitude tuned if requested) and reservoir.
struct Setup {
  control::SystemModel model;
  control::ControlSchedule schedule;
  std::optional<control::TuneResult> tuning;
  reservoir::FormFactor form_factor;
  reservoir::SpectralFunction spectral;
  reservoir::ModeSet modes;
};

// Builds the schedule for amplitude `mu` (ignored by bang-bang and none).
control::ControlSchedule make_schedule(const ExperimentConfig& cfg, double mu);
control::SystemModel make_model(const ExperimentConfig& cfg);
ComplexMatrix initial_state(const ExperimentConfig& cfg);
// Throws SearchFailure if tuning fails.
Setup prepare(const ExperimentConfig& cfg);

// Rate block for the given schedule; `skipped` is set when the second-order
// theory does not apply (d != 2, degenerate H_s, DD violated).
report::RatesBlock compute_rates(const ExperimentConfig& cfg, const Setup& setup);

exactsim::EvolveOptions evolve_options(const ExperimentConfig& cfg);
report::RunSummary summarize_run(const std::string& name, const exactsim::Trajectory& traj,
                                 const exactsim::DeviationReport& dev);

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitDD = 2, kExitNumeric = 3 };

struct Outcome {
  int exit_code = kExitOk;
  std::string message;
  report::Report report;
  std::vector<std::filesystem::path> files;
};

struct RunOptions {
  bool write_files = true;
  std::optional<std::filesystem::path> output_directory;  // overrides the config
};

// check-dd -> rates -> simulate(DD on) -> simulate(DD off, H_c = 0) -> compare.
// Writes trajectory_on.csv, trajectory_off.csv, report.json and summary.md.
// Never throws; failures are reported through the exit code and message.
Outcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

struct SweepOptions {
  bool simulate = true;  // false: rates only, retention and deviation left NaN
  int threads = 0;       // 0: DECOSHIELD_THREADS or the hardware concurrency
};

// One run per value along axis lambda, T, mu or N, sharing the spectral
// function and, where unchanged, the Fourier table and generator. Rows come
// back in the order of `values`. Throws ArgumentError for an unknown axis or
// fewer than two values.
report::SweepTable sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values,
                         const SweepOptions& options = {});

int thread_budget();

}  // namespace decoshield::experiment
