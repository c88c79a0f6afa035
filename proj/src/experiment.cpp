#include "decoshield/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace decoshield::experiment {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object reader that remembers which keys were asked for, so that leftovers
// can be reported as unknown.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const json* find(const std::string& key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

core::Complex as_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {as_number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]")};
  throw ConfigError(path, "expected a number or [re, im]");
}

std::vector<double> as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ComplexMatrix as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const auto rows = static_cast<int>(j.size());
  ComplexMatrix m(rows, rows);
  for (int r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != rows) throw ConfigError(rp, "matrix must be square");
    for (int c = 0; c < rows; ++c) m(r, c) = as_complex(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

json matrix_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      if (m(r, c).imag() == 0.0) {
        row.push_back(m(r, c).real());
      } else {
        row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

void parse_schedule(const json& j, ScheduleSpec& s) {
  Node n(j, "schedule");
  if (auto* v = n.find("kind")) s.kind = as_string(*v, n.path("kind"));
  if (s.kind != "sinusoidal" && s.kind != "smooth" && s.kind != "bangbang" && s.kind != "none") {
    throw ConfigError(n.path("kind"), "unknown schedule kind '" + s.kind + "' (sinusoidal, smooth, bangbang, none)");
  }
  if (auto* v = n.find("period")) s.period = as_number(*v, n.path("period"));
  if (auto* v = n.find("amplitude")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "tune") throw ConfigError(n.path("amplitude"), "expected a number or \"tune\"");
      s.amplitude.reset();
    } else {
      s.amplitude = as_number(*v, n.path("amplitude"));
    }
  }
  if (auto* v = n.find("tune_bracket")) {
    const auto b = as_vector(*v, n.path("tune_bracket"));
    if (b.size() != 2) throw ConfigError(n.path("tune_bracket"), "expected [lo, hi]");
    s.tune_bracket = {b[0], b[1]};
  }
  if (auto* v = n.find("profile")) {
    Node p(*v, n.path("profile"));
    if (auto* c0 = p.find("c0")) s.profile_c0 = as_number(*c0, p.path("c0"));
    if (auto* c = p.find("cos")) s.profile_cos = as_vector(*c, p.path("cos"));
    if (auto* c = p.find("sin")) s.profile_sin = as_vector(*c, p.path("sin"));
    p.finish();
  }
  if (auto* v = n.find("direction")) {
    if (!v->is_null()) s.direction = as_matrix(*v, n.path("direction"));
  }
  if (auto* v = n.find("kicks")) {
    if (!v->is_array()) throw ConfigError(n.path("kicks"), "expected an array of {phase, weight}");
    s.kicks.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      Node k((*v)[i], n.path("kicks") + "[" + std::to_string(i) + "]");
      control::Kick kick{0.0, 0.0};
      const json* ph = k.find("phase");
      const json* w = k.find("weight");
      if (!ph || !w) throw ConfigError(n.path("kicks") + "[" + std::to_string(i) + "]", "needs phase and weight");
      kick.phase = as_number(*ph, k.path("phase"));
      kick.weight = as_number(*w, k.path("weight"));
      k.finish();
      s.kicks.push_back(kick);
    }
  }
  n.finish();
}

void parse_reservoir(const json& j, ReservoirSpec& r) {
  Node n(j, "reservoir");
  if (auto* v = n.find("form_factor")) r.form_factor = as_string(*v, n.path("form_factor"));
  if (auto* v = n.find("amplitude")) r.amplitude = as_number(*v, n.path("amplitude"));
  if (auto* v = n.find("width")) r.width = as_number(*v, n.path("width"));
  if (auto* v = n.find("beta")) r.beta = as_number(*v, n.path("beta"));
  if (auto* v = n.find("modes")) r.modes = as_int(*v, n.path("modes"));
  if (auto* v = n.find("p_max")) r.p_max = as_number(*v, n.path("p_max"));
  if (auto* v = n.find("r_max")) r.r_max = as_number(*v, n.path("r_max"));
  n.finish();
}

void parse_run(const json& j, RunSpec& r) {
  Node n(j, "run");
  if (auto* v = n.find("horizon")) r.horizon = as_number(*v, n.path("horizon"));
  if (auto* v = n.find("sample_dt")) r.sample_dt = as_number(*v, n.path("sample_dt"));
  if (auto* v = n.find("initial_state")) {
    if (v->is_string()) {
      const auto name = v->get<std::string>();
      if (name != "plus") throw ConfigError(n.path("initial_state"), "expected \"plus\" or a density matrix");
      r.initial_state.resize(0, 0);
    } else {
      r.initial_state = as_matrix(*v, n.path("initial_state"));
    }
  }
  if (auto* v = n.find("method")) r.method = as_string(*v, n.path("method"));
  if (r.method != "auto" && r.method != "density" && r.method != "unravel") {
    throw ConfigError(n.path("method"), "unknown method '" + r.method + "' (auto, density, unravel)");
  }
  if (auto* v = n.find("samples")) r.samples = as_int(*v, n.path("samples"));
  if (auto* v = n.find("step")) r.step = as_number(*v, n.path("step"));
  if (auto* v = n.find("require_dd")) r.require_dd = as_bool(*v, n.path("require_dd"));
  n.finish();
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  const auto qubit = control::SystemModel::spin_fermion();
  cfg.hs = qubit.hs();
  cfg.q = qubit.q();
  Node root(doc, "");
  if (auto* v = root.find("scenario")) cfg.scenario = as_string(*v, "scenario");
  if (auto* v = root.find("seed")) {
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  }
  if (auto* v = root.find("system")) {
    Node s(*v, "system");
    if (auto* h = s.find("hs")) cfg.hs = as_matrix(*h, "system.hs");
    if (auto* q = s.find("q")) cfg.q = as_matrix(*q, "system.q");
    s.finish();
  }
  if (auto* v = root.find("schedule")) parse_schedule(*v, cfg.schedule);
  if (auto* v = root.find("reservoir")) parse_reservoir(*v, cfg.reservoir);
  if (auto* v = root.find("coupling")) {
    Node c(*v, "coupling");
    if (auto* l = c.find("lambda")) cfg.lambda = as_number(*l, "coupling.lambda");
    c.finish();
  }
  if (auto* v = root.find("run")) parse_run(*v, cfg.run);
  if (auto* v = root.find("constants")) {
    Node c(*v, "constants");
    if (auto* x = c.find("c_const")) cfg.c_const = as_number(*x, "constants.c_const");
    if (auto* x = c.find("C_const")) cfg.big_c_const = as_number(*x, "constants.C_const");
    c.finish();
  }
  if (auto* v = root.find("rates")) {
    Node r(*v, "rates");
    if (auto* x = r.find("first_power")) cfg.xi_first_power = as_bool(*x, "rates.first_power");
    r.finish();
  }
  if (auto* v = root.find("output")) {
    Node o(*v, "output");
    if (auto* x = o.find("directory")) cfg.output_directory = as_string(*x, "output.directory");
    o.finish();
  }
  root.finish();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.schedule;
  json schedule = {{"kind", s.kind},
                   {"period", s.period},
                   {"amplitude", s.amplitude ? json(*s.amplitude) : json("tune")},
                   {"tune_bracket", {s.tune_bracket[0], s.tune_bracket[1]}},
                   {"profile", {{"c0", s.profile_c0}, {"cos", s.profile_cos}, {"sin", s.profile_sin}}},
                   {"direction", s.direction.size() ? matrix_json(s.direction) : json(nullptr)}};
  json kicks = json::array();
  for (const auto& k : s.kicks) kicks.push_back({{"phase", k.phase}, {"weight", k.weight}});
  schedule["kicks"] = kicks;
  const auto& r = cfg.reservoir;
  return {{"scenario", cfg.scenario},
          {"seed", cfg.seed},
          {"system", {{"hs", matrix_json(cfg.hs)}, {"q", matrix_json(cfg.q)}}},
          {"schedule", schedule},
          {"reservoir",
           {{"form_factor", r.form_factor},
            {"amplitude", r.amplitude},
            {"width", r.width},
            {"beta", r.beta},
            {"modes", r.modes},
            {"p_max", r.p_max},
            {"r_max", r.r_max}}},
          {"coupling", {{"lambda", cfg.lambda}}},
          {"run",
           {{"horizon", cfg.run.horizon},
            {"sample_dt", cfg.run.sample_dt},
            {"initial_state", cfg.run.initial_state.size() ? matrix_json(cfg.run.initial_state) : json("plus")},
            {"method", cfg.run.method},
            {"samples", cfg.run.samples},
            {"step", cfg.run.step},
            {"require_dd", cfg.run.require_dd}}},
          {"constants", {{"c_const", cfg.c_const}, {"C_const", cfg.big_c_const}}},
          {"rates", {{"first_power", cfg.xi_first_power}}},
          {"output", {{"directory", cfg.output_directory}}}};
}

control::SystemModel make_model(const ExperimentConfig& cfg) { return control::SystemModel(cfg.hs, cfg.q); }

control::ControlSchedule make_schedule(const ExperimentConfig& cfg, double mu) {
  const auto& s = cfg.schedule;
  const int dim = static_cast<int>(cfg.hs.rows());
  const ComplexMatrix direction = s.direction.size() ? s.direction : core::sigma_z();
  if (s.kind == "none") return control::ControlSchedule::none(s.period, dim);
  if (s.kind == "bangbang") return control::ControlSchedule::bangbang(s.period, s.kicks, direction);
  if (s.kind == "sinusoidal") {
    if (!s.direction.size()) return control::ControlSchedule::sinusoidal(s.period, mu);
    return control::ControlSchedule::smooth(s.period, mu, control::Profile::cosine(), direction);
  }
  return control::ControlSchedule::smooth(s.period, mu, control::Profile::fourier(s.profile_c0, s.profile_cos, s.profile_sin),
                                          direction);
}

ComplexMatrix initial_state(const ExperimentConfig& cfg) {
  if (cfg.run.initial_state.size()) return cfg.run.initial_state;
  const auto dim = cfg.hs.rows();
  const core::ComplexVector plus = core::ComplexVector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  return plus * plus.adjoint();
}

void validate(const ExperimentConfig& cfg) {
  control::SystemModel model = [&] {
    if (cfg.hs.rows() != cfg.q.rows()) throw ConfigError("system.q", "must have the same dimension as system.hs");
    try {
      return make_model(cfg);
    } catch (const std::exception& e) {
      throw ConfigError("system", e.what());
    }
  }();
  const int dim = model.dim();
  const auto& s = cfg.schedule;
  if (!(s.period > 0.0)) throw ConfigError("schedule.period", "must be positive");
  const double a1 = s.period * model.hs_norm();
  if (!(a1 < std::numbers::pi / 2)) {
    std::ostringstream os;
    os << "T|H_s| = " << a1 << " violates the constraint T|H_s| < pi/2";
    throw ConfigError("schedule.period", os.str());
  }
  if (s.kind == "sinusoidal" || s.kind == "smooth") {
    if (!s.amplitude) {
      if (!(s.tune_bracket[0] < s.tune_bracket[1])) throw ConfigError("schedule.tune_bracket", "needs lo < hi");
    }
    if (s.kind == "smooth" && s.profile_cos.empty() && s.profile_sin.empty() && s.profile_c0 == 0.0) {
      throw ConfigError("schedule.profile", "profile is identically zero");
    }
  }
  if (s.kind == "bangbang" && s.kicks.empty()) throw ConfigError("schedule.kicks", "bang-bang needs at least one kick");
  if (s.kind != "none") {
    if (s.direction.size()) {
      if (s.direction.rows() != dim) throw ConfigError("schedule.direction", "dimension differs from system.hs");
      if (core::hermiticity_defect(s.direction) > 1e-12) throw ConfigError("schedule.direction", "must be Hermitian");
    } else if (dim != 2) {
      throw ConfigError("schedule.direction", "required unless the system is a qubit");
    }
    const ComplexMatrix direction = s.direction.size() ? s.direction : core::sigma_z();
    const double scale = std::max(1.0, model.hs_norm() * core::op_norm(direction));
    if (core::op_norm(core::commutator(model.hs(), direction)) > 1e-12 * scale) {
      throw ConfigError("schedule.direction", "control does not commute with H_s");
    }
    try {
      const auto trial = make_schedule(cfg, s.amplitude.value_or(0.5 * (s.tune_bracket[0] + s.tune_bracket[1])));
      control::require_commuting(model, trial);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(s.kind == "bangbang" ? "schedule.kicks" : "schedule", e.what());
    }
  }
  const auto& r = cfg.reservoir;
  const auto names = reservoir::form_factor_names();
  if (std::find(names.begin(), names.end(), r.form_factor) == names.end()) {
    throw ConfigError("reservoir.form_factor", "unknown form factor '" + r.form_factor + "'");
  }
  if (!(r.beta > 0.0)) throw ConfigError("reservoir.beta", "must be positive");
  if (!(r.width > 0.0)) throw ConfigError("reservoir.width", "must be positive");
  if (!(r.p_max > 0.0)) throw ConfigError("reservoir.p_max", "must be positive");
  if (!(r.r_max > 0.0)) throw ConfigError("reservoir.r_max", "must be positive");
  if (r.modes < 1 || r.modes > 14) throw ConfigError("reservoir.modes", "must lie in [1, 14]");
  const long total = static_cast<long>(dim) << r.modes;
  if (total > exactsim::kMaxTotalDim) {
    std::ostringstream os;
    os << "d 2^N = " << total << " exceeds the limit " << exactsim::kMaxTotalDim;
    throw ConfigError("reservoir.modes", os.str());
  }
  if (!(cfg.run.horizon > 0.0)) throw ConfigError("run.horizon", "must be positive");
  if (!(cfg.run.sample_dt > 0.0)) throw ConfigError("run.sample_dt", "must be positive");
  if (cfg.run.sample_dt > cfg.run.horizon) throw ConfigError("run.sample_dt", "exceeds run.horizon");
  if (cfg.run.horizon / cfg.run.sample_dt > 1e6) throw ConfigError("run.sample_dt", "more than 1e6 samples");
  if (cfg.run.samples < 1) throw ConfigError("run.samples", "must be positive");
  if (cfg.run.step < 0.0) throw ConfigError("run.step", "must be >= 0 (0 picks the default)");
  if (cfg.run.initial_state.size()) {
    if (cfg.run.initial_state.rows() != dim) throw ConfigError("run.initial_state", "dimension differs from system.hs");
    try {
      core::require_density_matrix(cfg.run.initial_state);
    } catch (const std::exception& e) {
      throw ConfigError("run.initial_state", e.what());
    }
  }
}

std::vector<std::string> builtin_scenarios() { return {"spin-fermion-sinusoidal"}; }

json builtin_scenario(const std::string& name) {
  if (name != "spin-fermion-sinusoidal") throw ArgumentError("unknown scenario '" + name + "'");
  return {{"scenario", "spin-fermion-sinusoidal"},
          {"seed", 1},
          {"system", {{"hs", {{1, 0}, {0, -1}}}, {"q", {{0, 1}, {1, 0}}}}},
          {"schedule", {{"kind", "sinusoidal"}, {"period", 0.1}, {"amplitude", "tune"}, {"tune_bracket", {6, 9}}}},
          {"reservoir",
           {{"form_factor", "gaussian-p"},
            {"amplitude", 1},
            {"width", 1},
            {"beta", 1},
            {"modes", 8},
            {"p_max", 6},
            {"r_max", 10}}},
          {"coupling", {{"lambda", 0.05}}},
          {"run", {{"horizon", 50}, {"sample_dt", 0.5}, {"initial_state", "plus"}, {"require_dd", true}}},
          {"constants", {{"c_const", 1}, {"C_const", 1}}},
          {"output", {{"directory", "out/spin-fermion-sinusoidal"}}}};
}

Setup prepare(const ExperimentConfig& cfg) {
  validate(cfg);
  auto model = make_model(cfg);
  const auto& s = cfg.schedule;
  std::optional<control::TuneResult> tuning;
  double mu = s.amplitude.value_or(0.0);
  const bool tunable = s.kind == "sinusoidal" || s.kind == "smooth";
  if (tunable && !s.amplitude) {
    auto family = [&cfg](double m) { return make_schedule(cfg, m); };
    tuning = control::tune_amplitude(model, family, s.tune_bracket[0], s.tune_bracket[1]);
    mu = tuning->mu;
  }
  auto schedule = make_schedule(cfg, mu);
  const auto& r = cfg.reservoir;
  auto ff = reservoir::make_form_factor(r.form_factor, r.beta, r.amplitude, r.width, r.r_max);
  auto g = reservoir::spectral_function(ff);
  auto modes = reservoir::discretize_modes(g, ff, r.modes, r.p_max);
  return Setup{std::move(model), std::move(schedule), tuning, std::move(ff), std::move(g), std::move(modes)};
}

namespace {

report::RatesBlock rates_block(const ExperimentConfig& cfg, const control::SystemModel& model,
                               const weakcoupling::WeakCouplingGenerator& gen) {
  report::RatesBlock b;
  b.summary = weakcoupling::decoherence_time(gen, cfg.c_const, cfg.xi_first_power);
  b.xi_first_power = weakcoupling::xi_rate(gen, true);
  b.k_used = gen.k_used;
  b.tail_estimate = gen.tail_estimate;
  b.truncation_converged = gen.truncation_converged;
  b.level_shifts = weakcoupling::level_shifts(gen, model);
  return b;
}

std::string rates_inapplicable(const control::SystemModel& model, const control::ControlSchedule& schedule,
                               const control::DDReport& dd) {
  if (model.dim() != 2 || !model.spectrum().simple()) return "second-order rates need a nondegenerate qubit";
  if (schedule.is_zero()) return "no control";
  if (!dd.verdict) return "DD condition violated";
  return {};
}

// Generator for a smooth schedule from a Fourier table whose modes do not
// depend on the period.
weakcoupling::WeakCouplingGenerator generator_from_table(const control::SystemModel& model,
                                                         const control::ControlSchedule& schedule,
                                                         control::FourierTable table,
                                                         const reservoir::SpectralFunction& g, double lambda) {
  table.period = schedule.period();
  auto gen = weakcoupling::level_shift(model, table, g, lambda);
  gen.truncation_converged =
      gen.tail_estimate < weakcoupling::kDefaultTailTolerance && table.tail_bound < weakcoupling::kDefaultTailTolerance;
  gen.d_parameter = schedule.d_parameter();
  return gen;
}

}  // namespace

report::RatesBlock compute_rates(const ExperimentConfig& cfg, const Setup& setup) {
  const auto dd = control::check_dd(setup.model, setup.schedule);
  report::RatesBlock b;
  b.skipped = rates_inapplicable(setup.model, setup.schedule, dd);
  if (!b.skipped.empty()) return b;
  const auto gen = weakcoupling::level_shift(setup.model, setup.schedule, setup.spectral, cfg.lambda);
  return rates_block(cfg, setup.model, gen);
}

exactsim::EvolveOptions evolve_options(const ExperimentConfig& cfg) {
  exactsim::EvolveOptions o;
  o.method = cfg.run.method == "density"   ? exactsim::Method::density
             : cfg.run.method == "unravel" ? exactsim::Method::unravel
                                           : exactsim::Method::automatic;
  o.step = cfg.run.step;
  o.samples = cfg.run.samples;
  o.seed = cfg.seed;
  return o;
}

report::RunSummary summarize_run(const std::string& name, const exactsim::Trajectory& traj,
                                 const exactsim::DeviationReport& dev) {
  report::RunSummary r;
  r.name = name;
  r.method = traj.method;
  r.step = traj.step;
  r.final_time = traj.times.back();
  r.final_retention = dev.final_retention;
  r.sup_deviation = dev.sup_deviation;
  r.max_population_drift = dev.max_population_drift;
  for (double tr : traj.total_trace) r.max_trace_drift = std::max(r.max_trace_drift, std::abs(tr - 1.0));
  r.times = dev.times;
  r.retention = dev.retention;
  r.deviation = dev.deviation;
  r.bound = dev.bound;
  return r;
}

namespace {

struct SimResult {
  exactsim::Trajectory traj;
  exactsim::DeviationReport dev;
};

SimResult simulate(const ExperimentConfig& cfg, const Setup& setup, const control::ControlSchedule& schedule,
                   const reservoir::ModeSet& modes) {
  exactsim::TotalModel tm{setup.model, modes, cfg.lambda, schedule};
  SimResult r{exactsim::evolve(tm, initial_state(cfg), cfg.run.horizon, cfg.run.sample_dt, evolve_options(cfg)), {}};
  exactsim::BoundShape shape{cfg.lambda, schedule.period(), schedule.d_parameter(), cfg.c_const, cfg.big_c_const};
  r.dev = exactsim::compare_with_effective(r.traj, setup.model, schedule, shape);
  return r;
}

void write_trajectory(const std::filesystem::path& path, const exactsim::Trajectory& traj) {
  std::ostringstream os;
  exactsim::write_csv(traj, os);
  report::write_file(path, os.str());
}

}  // namespace

Outcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  Outcome out;
  auto& rep = out.report;
  rep.provenance = report::make_provenance(cfg.scenario, to_json(cfg), cfg.seed);
  const std::filesystem::path dir = options.output_directory.value_or(cfg.output_directory);
  auto emit = [&] {
    if (!options.write_files) return;
    for (auto fmt : {report::Format::json, report::Format::markdown}) {
      const auto files = report::emit_report(rep, fmt, dir);
      out.files.insert(out.files.end(), files.begin(), files.end());
    }
  };
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
    return out;
  }
  try {
    std::optional<Setup> setup;
    try {
      setup.emplace(prepare(cfg));
    } catch (const SearchFailure& e) {
      out.exit_code = kExitDD;
      out.message = std::string(e.what()) + "\n" + e.scan_trace();
      return out;
    }
    const auto dd = control::check_dd(setup->model, setup->schedule);
    rep.dd = dd;
    rep.mu = setup->schedule.amplitude();
    rep.period = setup->schedule.period();
    rep.d_parameter = setup->schedule.d_parameter();
    if (!dd.verdict && cfg.run.require_dd) {
      std::ostringstream os;
      os << "DD condition fails: zero mode " << dd.zero_mode_norm << ", periodicity defect " << dd.periodicity_defect
         << " (tolerance " << dd.tolerance << ")";
      out.exit_code = kExitDD;
      out.message = os.str();
      emit();
      return out;
    }
    rep.rates = compute_rates(cfg, *setup);

    const auto on = simulate(cfg, *setup, setup->schedule, setup->modes);
    const auto off_schedule = control::ControlSchedule::none(cfg.schedule.period, setup->model.dim());
    const auto off = simulate(cfg, *setup, off_schedule, setup->modes);
    rep.runs.push_back(summarize_run("on", on.traj, on.dev));
    rep.runs.push_back(summarize_run("off", off.traj, off.dev));

    if (options.write_files) {
      std::filesystem::create_directories(dir);
      write_trajectory(dir / "trajectory_on.csv", on.traj);
      write_trajectory(dir / "trajectory_off.csv", off.traj);
      out.files.push_back(dir / "trajectory_on.csv");
      out.files.push_back(dir / "trajectory_off.csv");
    }
    emit();
    std::ostringstream os;
    os << "retention on " << on.dev.final_retention << ", off " << off.dev.final_retention << " at t = "
       << on.traj.times.back();
    out.message = os.str();
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitNumeric;
    out.message = e.what();
  }
  return out;
}

int thread_budget() {
  if (const char* env = std::getenv("DECOSHIELD_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(std::min(n, 256L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

report::SweepTable sweep(const ExperimentConfig& cfg, const std::string& axis, const std::vector<double>& values,
                         const SweepOptions& options) {
  if (axis != "lambda" && axis != "T" && axis != "mu" && axis != "N") {
    throw ArgumentError("sweep: unknown axis '" + axis + "' (lambda, T, mu, N)");
  }
  if (values.size() < 2) throw ArgumentError("sweep: at least two values are required");

  std::vector<ExperimentConfig> configs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) throw ArgumentError("sweep: values must be finite");
    ExperimentConfig c = cfg;
    if (axis == "lambda") {
      c.lambda = v;
    } else if (axis == "T") {
      c.schedule.period = v;
    } else if (axis == "mu") {
      c.schedule.amplitude = v;
    } else {
      if (v != std::floor(v) || v < 1) throw ArgumentError("sweep: N values must be positive integers");
      c.reservoir.modes = static_cast<int>(v);
    }
    try {
      validate(c);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep[" + std::to_string(i) + "]." + e.path(), e.what());
    }
    configs.push_back(std::move(c));
  }

  // Shared precomputation: the tuned amplitude (unless mu is swept), the
  // spectral function and, when the Fourier modes do not move, one generator.
  ExperimentConfig base_cfg = configs.front();
  const Setup base = prepare(base_cfg);
  const double base_mu = base.schedule.amplitude();
  std::optional<control::FourierTable> table;
  std::optional<weakcoupling::WeakCouplingGenerator> shared_gen;
  const auto base_dd = control::check_dd(base.model, base.schedule);
  if (axis != "mu" && rates_inapplicable(base.model, base.schedule, base_dd).empty()) {
    if (base.schedule.kind() == control::ScheduleKind::bangbang) {
      shared_gen = weakcoupling::level_shift(base.model, base.schedule, base.spectral, 1.0);
    } else {
      table = control::fourier_modes_auto(base.model, base.schedule, weakcoupling::kDefaultTailTolerance);
      shared_gen = generator_from_table(base.model, base.schedule, *table, base.spectral, 1.0);
    }
  }

  std::vector<report::SweepRow> rows(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  auto run_row = [&](std::size_t i) {
    const ExperimentConfig& c = configs[i];
    const double mu = axis == "mu" ? values[i] : base_mu;
    const auto schedule = make_schedule(c, mu);
    const auto dd = control::check_dd(base.model, schedule);
    report::SweepRow row;
    row.value = values[i];
    row.dd_pass = dd.verdict;
    row.xi = row.t_dec = row.retention = row.sup_deviation = kNaN;
    if (rates_inapplicable(base.model, schedule, dd).empty()) {
      weakcoupling::WeakCouplingGenerator gen;
      if (axis == "mu") {
        gen = weakcoupling::level_shift(base.model, schedule, base.spectral, c.lambda);
      } else if (axis == "T" && schedule.kind() == control::ScheduleKind::smooth) {
        gen = generator_from_table(base.model, schedule, *table, base.spectral, c.lambda);
      } else if (axis == "T") {
        gen = weakcoupling::level_shift(base.model, schedule, base.spectral, c.lambda);
      } else {
        gen = weakcoupling::with_lambda(*shared_gen, c.lambda);
      }
      const auto summary = weakcoupling::decoherence_time(gen, c.c_const, c.xi_first_power);
      row.xi = summary.xi;
      row.t_dec = summary.t_dec;
    }
    if (options.simulate) {
      const auto modes = axis == "N" ? reservoir::discretize_modes(base.spectral, base.form_factor, c.reservoir.modes,
                                                                   c.reservoir.p_max)
                                     : base.modes;
      const auto sim = simulate(c, base, schedule, modes);
      row.retention = sim.dev.final_retention;
      row.sup_deviation = sim.dev.sup_deviation;
    }
    rows[i] = row;
  };

  const int threads = std::min<int>(options.threads > 0 ? options.threads : thread_budget(),
                                    static_cast<int>(values.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        run_row(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return {axis, std::move(rows)};
}

}  // namespace decoshield::experiment
