// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <boost/math/quadrature/gauss.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "decoshield/experiment.hpp"
#include "oracles.hpp"

using namespace decoshield;
using core::ComplexMatrix;

namespace {

const double kPi = std::numbers::pi;
const double kJ0Zero = 2.4048255577;

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ComplexMatrix unit(int r, int c) {
  ComplexMatrix e = ComplexMatrix::Zero(2, 2);
  e(r, c) = 1.0;
  return e;
}

ComplexMatrix plus_state() { return ComplexMatrix::Constant(2, 2, 0.5); }

reservoir::ModeSet make_modes(int n, double beta = 1.0) {
  const auto ff = reservoir::make_form_factor("gaussian-p", beta);
  return reservoir::discretize_modes(reservoir::spectral_function(ff), ff, n, 6.0);
}

control::ControlSchedule flips(double period, double a1, double a2) {
  return control::ControlSchedule::bangbang(period, {{a1, kPi / 2}, {a2, -kPi / 2}}, core::sigma_z());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Result dd_tuning() {
  const auto model = control::SystemModel::spin_fermion();
  const auto r = control::tune_amplitude(
      model, [](double mu) { return control::ControlSchedule::sinusoidal(0.1, mu); }, 6.0, 9.0);
  const double err = std::abs(r.mu - kPi * kJ0Zero);
  const double oracle_err = std::abs(r.mu - kPi * oracle::bessel_j0_zero());
  const double z = core::op_norm(control::zero_mode(model, control::ControlSchedule::sinusoidal(0.1, r.mu)));
  return {err < 1e-6 && oracle_err < 1e-9 && z < 1e-8,
          "mu* = " + fmt("%.15g", r.mu) + ", |mu* - pi j01| = " + fmt("%.2e", err) + ", |Q(0)| = " + fmt("%.2e", z)};
}

Result dd_formulations() {
  const auto model = control::SystemModel::spin_fermion();
  oracle::Gen rng(2024);
  int agree = 0, labelled = 0, passing = 0;
  for (int i = 0; i < 10; ++i) {
    const bool expect = i < 5;
    const double period = rng.uniform(0.05, 1.0);
    control::ControlSchedule s = control::ControlSchedule::none(period, 2);
    if (i % 5 < 3) {
      const double a1 = rng.uniform(0.02, 0.45);
      double shift = 0.5;
      if (!expect) shift = rng.uniform(0.05, 0.5) * (rng.integer(0, 1) ? 1.0 : -1.0) + 0.5;
      s = flips(period, a1, std::min(a1 + shift, 0.99));
    } else if (expect) {
      const double zero = i % 5 == 3 ? oracle::bessel_j0_zero() : oracle::bessel_j0_zero(5.0, 6.0);
      s = control::ControlSchedule::sinusoidal(period, kPi * zero);
    } else {
      s = control::ControlSchedule::sinusoidal(period, rng.uniform(1.0, 6.0));
    }
    const auto r = control::check_dd(model, s, 1e-7);
    agree += r.formulations_agree();
    labelled += r.verdict == expect;
    passing += r.verdict;
  }
  return {agree == 10 && labelled == 10,
          std::to_string(agree) + "/10 agree, " + std::to_string(passing) + " passing, " + std::to_string(labelled) +
              "/10 as labelled"};
}

// (1/T) int_0^T e^{-2 pi i k t/T} V*(t) q_a V(t) dt with V(t) = exp(i phi(t) sigma_z)
// piecewise constant between kicks.
ComplexMatrix bangbang_quadrature(const std::vector<control::Kick>& kicks, int k, int a) {
  std::vector<double> cuts{0.0};
  std::vector<double> phis{0.0};
  double phi = 0.0;
  for (const auto& kk : kicks) {
    cuts.push_back(kk.phase);
    phi += kk.weight;
    phis.push_back(phi);
  }
  cuts.push_back(1.0);
  oracle::cd sum = 0.0;
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double sign = a < 0 ? -2.0 : 2.0;
    const oracle::cd rot = std::exp(oracle::cd(0.0, sign * phis[seg]));
    const int panels = 32;
    const double h = (cuts[seg + 1] - cuts[seg]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = cuts[seg] + p * h;
      auto re = [&](double s) { return std::cos(2 * kPi * k * s); };
      auto im = [&](double s) { return -std::sin(2 * kPi * k * s); };
      sum += rot * oracle::cd(boost::math::quadrature::gauss<double, 20>::integrate(re, lo, lo + h),
                              boost::math::quadrature::gauss<double, 20>::integrate(im, lo, lo + h));
    }
  }
  return sum * (a < 0 ? unit(0, 1) : unit(1, 0));
}

Result fourier_correctness() {
  const auto model = control::SystemModel::spin_fermion();
  const double mu = kPi * oracle::bessel_j0_zero();
  const auto table = control::fourier_modes(model, control::ControlSchedule::sinusoidal(0.1, mu), 32);
  const auto smooth = control::fourier_modes(
      model,
      control::ControlSchedule::smooth(0.2, 2.5, control::Profile::fourier(0.0, {1.0, -0.4}, {0.3}), core::sigma_z()),
      64);
  const double parseval = std::max(table.parseval_defect, smooth.parseval_defect);
  double bessel_err = 0.0;
  for (int k = 1; k <= 8; ++k) {
    bessel_err = std::max(bessel_err, std::abs(core::op_norm(table.ladder_mode(k, -1)) -
                                               std::abs(oracle::bessel_j(k, mu / kPi))));
  }
  double quad_err = 0.0;
  for (const auto& s : {flips(1.0, 0.17, 0.67), flips(0.3, 0.05, 0.55), flips(2.0, 0.4, 0.9)}) {
    for (int k = -50; k <= 50; ++k) {
      if (k == 0) continue;
      for (int a : {-1, 1}) {
        const ComplexMatrix diff =
            control::qka_bangbang_closed_form(model, s, k, a) - bangbang_quadrature(s.kicks(), k, a);
        quad_err = std::max(quad_err, diff.cwiseAbs().maxCoeff());
      }
    }
  }
  const auto sym = flips(1.0, 0.25, 0.75);
  double lo = 1e300, hi = 0.0;
  for (int k = 1; k <= 49; k += 2) {
    for (int a : {-1, 1}) {
      const double v = k * core::op_norm(control::qka_bangbang_closed_form(model, sym, k, a));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {parseval < 1e-8 && bessel_err < 1e-6 && quad_err < 1e-6 && hi - lo < 1e-9,
          "Parseval " + fmt("%.1e", parseval) + ", |J_k| err " + fmt("%.1e", bessel_err) + ", quadrature err " +
              fmt("%.1e", quad_err) + ", k|Q_k| spread " + fmt("%.1e", hi - lo)};
}

Result level_shift_oracle() {
  const auto model = control::SystemModel::spin_fermion();
  const auto g = reservoir::spectral_function(reservoir::make_form_factor("gaussian-p", 1.0));
  const double mu = kPi * oracle::bessel_j0_zero();
  const double period = 1.0, lambda = 0.05;
  const auto s = control::ControlSchedule::sinusoidal(period, mu);
  const auto gen = weakcoupling::level_shift(model, s, g, lambda);
  const ComplexMatrix ref = oracle::level_shift_a2(
      [&](int k, int a) -> ComplexMatrix { return oracle::bessel_j(k, mu / kPi) * (a < 0 ? unit(0, 1) : unit(1, 0)); },
      [&](double p) { return g(p); }, g.p_lo(), g.p_hi(), period, 2.0, lambda, gen.k_used);
  const double floor = 1e-12 * ref.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const double err = std::abs(gen.a2.matrix()(r, c) - ref(r, c));
      if (err > floor) worst = std::max(worst, err / std::abs(ref(r, c)));
    }
  bool no_zero = true;
  for (const auto& t : gen.terms) no_zero = no_zero && t.k != 0;
  const auto minus = weakcoupling::level_shift(model, s, g, -lambda);
  const bool even = gen.a2.matrix() == minus.a2.matrix();
  return {worst < 1e-4 && no_zero && even, "max relative entry error " + fmt("%.2e", worst) +
                                                (no_zero ? ", no k = 0 terms" : ", k = 0 present") +
                                                (even ? ", +-lambda identical" : ", +-lambda differ")};
}

Result delta_structure() {
  const auto model = control::SystemModel::spin_fermion();
  const auto g = reservoir::spectral_function(reservoir::make_form_factor("gaussian-p", 1.0));
  const auto gen =
      weakcoupling::level_shift(model, control::ControlSchedule::sinusoidal(0.1, kPi * oracle::bessel_j0_zero()), g, 0.05);
  const auto ls = core::build_superop(core::SuperKind::commutator, model.hs());
  const double comm = (gen.delta.matrix() * ls.matrix() - ls.matrix() * gen.delta.matrix()).cwiseAbs().maxCoeff();
  const auto& v = model.spectrum().eigenvectors;
  double diag = 0.0;
  for (int k = 0; k < 2; ++k) diag = std::max(diag, gen.delta.apply(v.col(k) * v.col(k).adjoint()).norm());
  oracle::Gen rng(55);
  const ComplexMatrix rho = rng.density(2);
  const ComplexMatrix e0 = v.adjoint() * rho * v;
  double modulus = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const ComplexMatrix e = v.adjoint() * weakcoupling::corrected_propagate(gen, model, rho, 0.5 * i) * v;
    modulus = std::max(modulus, std::abs(std::abs(e(0, 1)) - std::abs(e0(0, 1))));
  }
  return {comm < 1e-10 && diag < 1e-12 && modulus < 1e-12, "|[Delta, L_s]| " + fmt("%.1e", comm) +
                                                              ", |Delta(P_k)| " + fmt("%.1e", diag) +
                                                              ", modulus drift " + fmt("%.1e", modulus)};
}

Result exact_ground_truth() {
  const auto model = control::SystemModel::spin_fermion();
  const double period = 0.1;
  double free_err = 0.0;
  for (const auto& s : {control::ControlSchedule::sinusoidal(period, kPi * oracle::bessel_j0_zero()),
                        flips(period, 0.25, 0.75)}) {
    const exactsim::TotalModel tm{model, make_modes(4), 0.0, s};
    const auto traj = exactsim::evolve(tm, plus_state(), 10 * period, period / 8);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      free_err = std::max(free_err, oracle::trace_distance(
                                        traj.reduced[i], control::effective_dynamics(model, s, plus_state(), traj.times[i])));
    }
  }

  const auto modes = make_modes(1);
  const double lambda = 0.3;
  const exactsim::TotalModel one{model, modes, lambda, control::ControlSchedule::none(period, 2)};
  const ComplexMatrix a = unit(0, 1);
  const ComplexMatrix h = core::kron(core::sigma_z(), core::identity(2)) +
                          modes.omega[0] * core::kron(core::identity(2), a.adjoint() * a) +
                          lambda * modes.coupling[0] / std::sqrt(2.0) * core::kron(core::sigma_x(), a + a.adjoint());
  ComplexMatrix rho_r = ComplexMatrix::Zero(2, 2);
  rho_r(0, 0) = 1.0 - modes.occupation[0];
  rho_r(1, 1) = modes.occupation[0];
  const ComplexMatrix rho0 = core::kron(plus_state(), rho_r);
  const auto traj = exactsim::evolve(one, plus_state(), 10.0, 0.5);
  double dense_err = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const ComplexMatrix u = oracle::expm_hermitian(h, traj.times[i]);
    const ComplexMatrix full = u * rho0 * u.adjoint();
    ComplexMatrix red = ComplexMatrix::Zero(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) red(r, c) = full(2 * r, 2 * c) + full(2 * r + 1, 2 * c + 1);
    dense_err = std::max(dense_err, oracle::trace_distance(traj.reduced[i], red));
  }

  const double car = exactsim::car_defect(exactsim::annihilators(6));
  const auto thermal_modes = make_modes(6, 0.8);
  const ComplexMatrix rho_th = exactsim::thermal_reservoir_state(thermal_modes);
  const auto ann = exactsim::annihilators(6);
  double fd = 0.0;
  for (int j = 0; j < 6; ++j) {
    const ComplexMatrix aj = ann[j];
    const double n = (rho_th * aj.adjoint() * aj).trace().real();
    fd = std::max(fd, std::abs(n - 1.0 / (1.0 + std::exp(0.8 * thermal_modes.omega[j]))));
  }
  return {free_err < 1e-8 && dense_err < 1e-8 && car < 1e-12 && fd < 1e-12,
          "lambda = 0 " + fmt("%.1e", free_err) + ", N = 1 " + fmt("%.1e", dense_err) + ", CAR " + fmt("%.1e", car) +
              ", Fermi-Dirac " + fmt("%.1e", fd)};
}

experiment::ExperimentConfig default_config() {
  return experiment::parse_config(experiment::builtin_scenario("spin-fermion-sinusoidal"));
}

experiment::Outcome default_run(const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  return experiment::run_experiment(default_config(), experiment::RunOptions{true, dir});
}

Result suppression() {
  const auto out = default_run("acceptance_out/run_a");
  if (out.exit_code != experiment::kExitOk) return {false, "run failed: " + out.message};
  const auto& on = out.report.runs[0];
  const auto& off = out.report.runs[1];
  const double ratio = on.final_retention / off.final_retention;
  return {ratio >= 2.0 && on.max_population_drift <= 0.1,
          "retention on " + fmt("%.6f", on.final_retention) + ", off " + fmt("%.6f", off.final_retention) +
              ", ratio " + fmt("%.4f", ratio) + " (need >= 2), population drift " +
              fmt("%.2e", on.max_population_drift)};
}

Result scaling() {
  const auto cfg = default_config();
  experiment::SweepOptions opt;
  const auto t_sweep = experiment::sweep(cfg, "T", {0.2, 0.1, 0.05}, opt);
  bool monotone = true;
  std::string ret;
  for (std::size_t i = 0; i < t_sweep.rows.size(); ++i) {
    if (i > 0) monotone = monotone && t_sweep.rows[i].retention >= t_sweep.rows[i - 1].retention - 1e-3;
    ret += (i ? ", " : "") + fmt("%.6f", t_sweep.rows[i].retention);
  }
  auto flat = cfg;
  flat.c_const = 0.0;
  opt.simulate = false;
  const std::vector<double> lambdas{0.0125, 0.025, 0.05, 0.1, 0.2};
  const auto l_sweep = experiment::sweep(flat, "lambda", lambdas, opt);
  double spread = 0.0;
  const double ref = l_sweep.rows[0].t_dec * lambdas[0] * lambdas[0];
  for (const auto& row : l_sweep.rows) {
    spread = std::max(spread, std::abs(row.t_dec * row.value * row.value / ref - 1.0));
    const double closed = 1.0 / (2 * kPi * row.value * row.value * row.xi);
    spread = std::max(spread, std::abs(row.t_dec / closed - 1.0));
  }
  return {monotone && spread < 1e-12,
          "retention at T = 0.2, 0.1, 0.05: " + ret + "; t_dec lambda^2 spread " + fmt("%.1e", spread)};
}

Result bangbang_shape() {
  const auto model = control::SystemModel::spin_fermion();
  const auto ff = reservoir::make_form_factor("gaussian-p", 1.0);
  const auto g = reservoir::spectral_function(ff);
  const double period = 1.0, lambda = 0.05;
  const auto gen = weakcoupling::level_shift(model, flips(period, 0.25, 0.75), g, lambda);
  auto g_indep = [](double p) {
    const double f = std::abs(p) * std::exp(-p * p / 2);
    const double sigma = 1.0 / (1.0 + std::exp(-p));
    return 4 * kPi * std::pow(p, 4) * f * f * sigma * sigma;
  };
  std::map<int, double> y;
  for (const auto& t : gen.terms) {
    if (t.q_norm < 1e-12) continue;
    y[t.k] += lambda * lambda * t.q_norm * t.q_norm * t.g * t.g;
  }
  std::vector<double> xs, ys;
  for (const auto& [k, v] : y) {
    const double x = (std::pow(g_indep(k / period + 2), 2) + std::pow(g_indep(k / period - 2), 2)) / (double(k) * k);
    xs.push_back(x);
    ys.push_back(v);
  }
  const double n = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  const double slope = sxy / sxx;
  return {r2 > 0.999, std::to_string(xs.size()) + " k-terms, R^2 = " + fmt("%.12f", r2) + ", slope / lambda^2 = " +
                           fmt("%.10f", slope / (lambda * lambda)) + " (4/pi^2 = " + fmt("%.10f", 4 / (kPi * kPi)) +
                           ")"};
}

Result determinism() {
  if (!std::filesystem::exists("acceptance_out/run_a/report.json")) default_run("acceptance_out/run_a");
  const auto out = default_run("acceptance_out/run_b");
  if (out.exit_code != experiment::kExitOk) return {false, "run failed: " + out.message};
  int same = 0, total = 0;
  for (const char* name : {"report.json", "summary.md", "trajectory_on.csv", "trajectory_off.csv"}) {
    ++total;
    same += slurp(std::filesystem::path("acceptance_out/run_a") / name) ==
            slurp(std::filesystem::path("acceptance_out/run_b") / name);
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " files byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    Result (*run)();
    double limit;  // seconds, 0 for none
  };
  const Criterion criteria[] = {
      {1, "DD tuning", dd_tuning, 1.0},
      {2, "DD formulations agree", dd_formulations, 10.0},
      {3, "Fourier correctness", fourier_correctness, 30.0},
      {4, "level-shift oracle", level_shift_oracle, 60.0},
      {5, "Delta structure", delta_structure, 0.0},
      {6, "exact simulator ground truth", exact_ground_truth, 120.0},
      {7, "suppression demonstration", suppression, 300.0},
      {8, "scaling", scaling, 900.0},
      {9, "bang-bang rate shape", bangbang_shape, 30.0},
      {10, "determinism", determinism, 0.0},
  };
  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit == 0.0 || secs < c.limit;
    const bool ok = r.pass && in_time;
    failed += !ok;
    std::printf("criterion %2d %s: %s  %s [%.2f s%s]\n", c.id, c.name, ok ? "PASS" : "FAIL", r.detail.c_str(), secs,
                in_time ? "" : ", over the time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
