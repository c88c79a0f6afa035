#include <doctest.h>

#include <array>
#include <numbers>
#include <sstream>

#include "decoshield/errors.hpp"
#include "decoshield/exactsim.hpp"
#include "oracles.hpp"

using namespace decoshield;
using namespace decoshield::exactsim;
using core::ComplexMatrix;

namespace {

const double kPi = std::numbers::pi;
const double kMuStar = kPi * oracle::bessel_j0_zero();

reservoir::ModeSet make_modes(int n, double beta = 1.0, double p_max = 6.0) {
  const auto ff = reservoir::make_form_factor("gaussian-p", beta);
  return reservoir::discretize_modes(reservoir::spectral_function(ff), ff, n, p_max);
}

ComplexMatrix plus_state() { return ComplexMatrix::Constant(2, 2, 0.5); }

// Reduced state of U (rho_s (x) rho_R) U* for a 2 x 2 total space, traced by hand.
ComplexMatrix reduce_qubit_mode(const ComplexMatrix& rho) {
  ComplexMatrix out = ComplexMatrix::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out(i, j) = rho(2 * i, 2 * j) + rho(2 * i + 1, 2 * j + 1);
  return out;
}

}  // namespace

TEST_CASE("Jordan-Wigner operators satisfy the CAR") {
  const auto a = annihilators(6);
  REQUIRE(a.size() == 6);
  CHECK(car_defect(a) < 1e-12);
  CHECK_THROWS_AS(annihilators(0), ArgumentError);
  // Mode 0 is the most significant factor and |0> is empty.
  const auto a1 = annihilators(1);
  CHECK(ComplexMatrix(a1[0])(0, 1) == core::Complex(1.0));
}

TEST_CASE("thermal occupations are Fermi-Dirac") {
  const auto modes = make_modes(5, 0.7);
  const ComplexMatrix rho = thermal_reservoir_state(modes);
  CHECK(rho.trace().real() == doctest::Approx(1.0).epsilon(1e-14));
  const auto a = annihilators(5);
  for (int j = 0; j < 5; ++j) {
    const ComplexMatrix aj = a[j];
    const double n = (rho * aj.adjoint() * aj).trace().real();
    CHECK(std::abs(n - 1.0 / (1.0 + std::exp(0.7 * modes.omega[j]))) < 1e-12);
  }
}

TEST_CASE("reservoir operators") {
  const auto modes = make_modes(3);
  const ComplexMatrix hr = reservoir_hamiltonian(modes);
  const ComplexMatrix phi = field_operator(modes);
  CHECK(core::hermiticity_defect(hr) < 1e-15);
  CHECK(core::hermiticity_defect(phi) < 1e-15);
  // Phi^2 = (1/2) sum f_j^2 by the CAR.
  double sum = 0.0;
  for (double f : modes.coupling) sum += f * f;
  CHECK(((phi * phi) - 0.5 * sum * core::identity(8)).norm() < 1e-12);
}

TEST_CASE("total generator") {
  TotalModel tm{control::SystemModel::spin_fermion(), make_modes(3), 0.1, control::ControlSchedule::sinusoidal(0.1, 7.0)};
  const ComplexMatrix h = build_total_generator(tm, 0.03);
  CHECK(h.rows() == 16);
  CHECK(core::hermiticity_defect(h) < 1e-13);
  TotalModel big{control::SystemModel::spin_fermion(), make_modes(14), 0.1, control::ControlSchedule::none(0.1, 2)};
  CHECK_THROWS_AS(build_total_generator(big, 0.0), ResourceError);
  CHECK_THROWS_AS(evolve(big, plus_state(), 1.0, 0.5), ResourceError);
}

TEST_CASE("zero coupling reproduces the effective dynamics") {
  const auto model = control::SystemModel::spin_fermion();
  for (const auto& schedule :
       {control::ControlSchedule::sinusoidal(0.1, kMuStar),
        control::ControlSchedule::bangbang(0.1, {{0.25, kPi / 2}, {0.75, -kPi / 2}}, core::sigma_z())}) {
    TotalModel tm{model, make_modes(3), 0.0, schedule};
    const auto traj = evolve(tm, plus_state(), 1.0, 0.037);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto ref = control::effective_dynamics(model, schedule, plus_state(), traj.times[i]);
      CHECK(oracle::trace_distance(traj.reduced[i], ref) < 1e-8);
    }
  }
}

TEST_CASE("one mode without control against dense diagonalization") {
  const auto modes = make_modes(1);
  const double lambda = 0.3;
  TotalModel tm{control::SystemModel::spin_fermion(), modes, lambda, control::ControlSchedule::none(0.1, 2)};
  // H = Z (x) 1 + 1 (x) w n + lambda X (x) f (a + a*) / sqrt 2
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  const ComplexMatrix h = core::kron(core::sigma_z(), core::identity(2)) +
                          modes.omega[0] * core::kron(core::identity(2), a.adjoint() * a) +
                          lambda * modes.coupling[0] / std::sqrt(2.0) * core::kron(core::sigma_x(), a + a.adjoint());
  ComplexMatrix rho_r = ComplexMatrix::Zero(2, 2);
  rho_r(0, 0) = 1.0 - modes.occupation[0];
  rho_r(1, 1) = modes.occupation[0];
  const ComplexMatrix rho0 = core::kron(plus_state(), rho_r);
  const auto traj = evolve(tm, plus_state(), 5.0, 0.5);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const ComplexMatrix u = oracle::expm_hermitian(h, traj.times[i]);
    const ComplexMatrix ref = reduce_qubit_mode(u * rho0 * u.adjoint());
    CHECK(oracle::trace_distance(traj.reduced[i], ref) < 1e-8);
  }
  CHECK(traj.method == "density-static");
}

TEST_CASE("one mode with sinusoidal control against RK4 in the lab frame") {
  const auto modes = make_modes(1);
  const double lambda = 0.3, period = 0.1;
  const auto schedule = control::ControlSchedule::sinusoidal(period, kMuStar);
  TotalModel tm{control::SystemModel::spin_fermion(), modes, lambda, schedule};
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = 1.0;
  const ComplexMatrix h0 = core::kron(core::sigma_z(), core::identity(2)) +
                           modes.omega[0] * core::kron(core::identity(2), a.adjoint() * a) +
                           lambda * modes.coupling[0] / std::sqrt(2.0) * core::kron(core::sigma_x(), a + a.adjoint());
  const ComplexMatrix zz = core::kron(core::sigma_z(), core::identity(2));
  auto h = [&](double t) -> ComplexMatrix { return h0 + (kMuStar / period) * std::cos(2 * kPi * t / period) * zz; };
  ComplexMatrix rho_r = ComplexMatrix::Zero(2, 2);
  rho_r(0, 0) = 1.0 - modes.occupation[0];
  rho_r(1, 1) = modes.occupation[0];
  const ComplexMatrix rho0 = core::kron(plus_state(), rho_r);
  const auto traj = evolve(tm, plus_state(), 10 * period, 0.25 * period);
  ComplexMatrix u = core::identity(4);
  double t_prev = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    if (t > t_prev) u = oracle::rk4(h, u, t_prev, t, static_cast<int>(std::ceil((t - t_prev) / 2e-5)));
    t_prev = t;
    const ComplexMatrix ref = reduce_qubit_mode(u * rho0 * u.adjoint());
    CHECK(oracle::trace_distance(traj.reduced[i], ref) < 1e-8);
  }
}

TEST_CASE("Floquet reuse agrees with sequential stepping") {
  TotalModel tm{control::SystemModel::spin_fermion(), make_modes(3), 0.2,
                control::ControlSchedule::sinusoidal(0.1, kMuStar)};
  EvolveOptions seq;
  seq.use_floquet = false;
  const auto a = evolve(tm, plus_state(), 1.3, 0.13);
  const auto b = evolve(tm, plus_state(), 1.3, 0.13, seq);
  CHECK(a.method == "density-floquet");
  CHECK(b.method == "density");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a.reduced[i] - b.reduced[i]).norm() < 1e-10);
}

TEST_CASE("unraveling with exact enumeration equals the density method") {
  TotalModel tm{control::SystemModel::spin_fermion(), make_modes(3), 0.2,
                control::ControlSchedule::sinusoidal(0.1, kMuStar)};
  EvolveOptions un;
  un.method = Method::unravel;
  un.samples = 16;
  const auto a = evolve(tm, plus_state(), 0.5, 0.1);
  const auto b = evolve(tm, plus_state(), 0.5, 0.1, un);
  CHECK(b.method == "unravel");
  CHECK(b.distinct_configurations == 8);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a.reduced[i] - b.reduced[i]).norm() < 1e-10);
  CHECK(std::isnan(b.total_purity[0]));
}

TEST_CASE("sampled unraveling is seeded and normalized") {
  TotalModel tm{control::SystemModel::spin_fermion(), make_modes(5), 0.2, control::ControlSchedule::none(0.1, 2)};
  EvolveOptions un;
  un.method = Method::unravel;
  un.samples = 8;
  un.seed = 42;
  const auto a = evolve(tm, plus_state(), 1.0, 0.5, un);
  const auto b = evolve(tm, plus_state(), 1.0, 0.5, un);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a.reduced[i] - b.reduced[i]).norm() == 0.0);
    CHECK(a.reduced[i].trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(a.distinct_configurations <= 8);
}

TEST_CASE("trajectory bookkeeping") {
  TotalModel tm{control::SystemModel::spin_fermion(), make_modes(2), 0.1, control::ControlSchedule::none(0.1, 2)};
  const auto traj = evolve(tm, plus_state(), 1.0, 0.3);
  REQUIRE(traj.size() == 5);
  CHECK(traj.times.back() == 1.0);
  CHECK(traj.times[3] == doctest::Approx(0.9));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(std::abs(traj.total_trace[i] - 1.0) < 1e-10);
    CHECK(traj.total_purity[i] <= 1.0 + 1e-10);
  }
  CHECK(traj.coherence(0, 0, 1) == doctest::Approx(0.5));
  CHECK(traj.population(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(evolve(tm, plus_state(), 1.0, 0.0), ArgumentError);
  CHECK_THROWS_AS(evolve(tm, core::sigma_x(), 1.0, 0.1), ArgumentError);
}

TEST_CASE("comparison with the effective dynamics") {
  const auto model = control::SystemModel::spin_fermion();
  const auto schedule = control::ControlSchedule::sinusoidal(0.1, kMuStar);
  TotalModel tm{model, make_modes(2), 0.0, schedule};
  const auto traj = evolve(tm, plus_state(), 1.0, 0.1);
  const BoundShape shape{0.0, 0.1, schedule.d_parameter(), 1.0, 1.0};
  const auto dev = compare_with_effective(traj, model, schedule, shape);
  CHECK(dev.sup_deviation < 1e-8);
  CHECK(dev.final_retention == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(dev.max_population_drift < 1e-8);
  const auto part = compare_with_effective(traj, model, schedule, shape, 0.5);
  CHECK(part.times.back() <= 0.5 + 1e-12);
  auto broken = traj;
  broken.times[2] = broken.times[1];
  CHECK_THROWS_AS(compare_with_effective(broken, model, schedule, shape), ArgumentError);
}

TEST_CASE("bound shape") {
  const BoundShape b{0.05, 0.1, 7.5, 1.0, 2.0};
  const double t = 30.0;
  const double expected = 2.0 * (0.05 + (7.5 * 0.05 + 1.0) * 0.1 + 1.0 - std::exp(-t * 0.05 * 0.1));
  CHECK(bound_shape(b, t) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("trajectory CSV") {
  CHECK(csv_header(2) == "t,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11,coherence_01,deviation,pop_0,pop_1");
  TotalModel tm{control::SystemModel::spin_fermion(), make_modes(2), 0.1, control::ControlSchedule::none(0.1, 2)};
  const auto traj = evolve(tm, plus_state(), 0.2, 0.1);
  std::ostringstream a, b;
  write_csv(traj, a);
  write_csv(evolve(tm, plus_state(), 0.2, 0.1), b);
  CHECK(a.str() == b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == csv_header(2));
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
