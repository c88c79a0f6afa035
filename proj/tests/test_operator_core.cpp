#include <doctest.h>

#include <array>

#include "decoshield/errors.hpp"
#include "decoshield/operator_core.hpp"
#include "oracles.hpp"

using namespace decoshield;
using namespace decoshield::core;

TEST_CASE("pauli algebra") {
  const auto x = sigma_x(), y = sigma_y(), z = sigma_z();
  const Complex i{0.0, 1.0};
  CHECK((x * y - i * z).norm() < 1e-15);
  CHECK((commutator(x, y) - 2.0 * i * z).norm() < 1e-15);
  CHECK(anticommutator(x, x).isApprox(2.0 * identity(2)));
  CHECK(op_norm(x) == doctest::Approx(1.0));
  CHECK(hermiticity_defect(y) < 1e-15);
}

TEST_CASE("kron puts the first factor in the most significant position") {
  const ComplexMatrix k = kron(sigma_x(), identity(2));
  CHECK(k(0, 2) == Complex(1.0));
  CHECK(k(0, 1) == Complex(0.0));
}

TEST_CASE("super-operators act on column-stacked vectors") {
  oracle::Gen gen(11);
  const auto a = gen.matrix(3), x = gen.matrix(3);
  CHECK((left_mult(a).apply(x) - a * x).norm() < 1e-13);
  CHECK((right_mult(a).apply(x) - x * a).norm() < 1e-13);
  CHECK((build_superop(SuperKind::commutator, a).apply(x) - (a * x - x * a)).norm() < 1e-13);
  CHECK((left_mult(a).matrix() - oracle::sandwich(a, oracle::identity(3))).norm() < 1e-13);
  ComplexMatrix e10 = ComplexMatrix::Zero(2, 2);
  e10(1, 0) = 1.0;
  CHECK(vec(e10)(1) == Complex(1.0));
  CHECK((unvec(vec(x), 3) - x).norm() == 0.0);
  const auto b = gen.matrix(3);
  CHECK(((left_mult(a) * left_mult(b)).apply(x) - a * b * x).norm() < 1e-12);
}

TEST_CASE("trace distance and density checks") {
  ComplexMatrix p0 = ComplexMatrix::Zero(2, 2), p1 = ComplexMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  CHECK(trace_distance(p0, p1) == doctest::Approx(1.0));
  CHECK_NOTHROW(require_density_matrix(p0));
  CHECK_THROWS_AS(require_density_matrix(sigma_z()), ArgumentError);
  CHECK_THROWS_AS(require_density_matrix(2.0 * p0), ArgumentError);
}

TEST_CASE("spectral decomposition groups degenerate eigenvalues") {
  ComplexMatrix h = ComplexMatrix::Zero(3, 3);
  h.diagonal() << 1.0, -2.0, 1.0;
  const auto sp = spectral_decomposition(h);
  REQUIRE(sp.eigenvalues.size() == 2);
  CHECK(sp.eigenvalues[0] == doctest::Approx(-2.0));
  CHECK(sp.multiplicity[1] == 2);
  CHECK_FALSE(sp.simple());
  CHECK((sp.projectors[0] + sp.projectors[1] - identity(3)).norm() < 1e-12);
}

TEST_CASE("unitary_exp agrees with the matrix exponential") {
  oracle::Gen gen(3);
  const auto h = gen.hermitian(4);
  const ComplexMatrix a = Complex(0.0, -0.7) * h;
  CHECK((unitary_exp(h, 0.7) - matrix_exp(a)).norm() < 1e-12);
  CHECK((unitary_exp(h, 0.7) - oracle::expm_hermitian(h, 0.7)).norm() < 1e-12);
}

TEST_CASE("polar factor of a perturbed unitary") {
  oracle::Gen gen(5);
  const ComplexMatrix u = unitary_exp(gen.hermitian(5), 1.0);
  const ComplexMatrix m = u + 1e-6 * gen.matrix(5);
  const ComplexMatrix p = polar_unitary(m);
  CHECK((p.adjoint() * p - identity(5)).norm() < 1e-13);
  CHECK((p - u).norm() < 1e-5);
  const ComplexMatrix tall = u.leftCols(2) + 1e-7 * gen.matrix(5).leftCols(2);
  const ComplexMatrix iso = polar_unitary(tall);
  CHECK((iso.adjoint() * iso - identity(2)).norm() < 1e-13);
  CHECK_THROWS_AS(polar_unitary(u.topRows(2)), ArgumentError);
}

TEST_CASE("CF4 propagator: constant and commuting time-dependent generators") {
  oracle::Gen gen(7);
  const auto h = gen.hermitian(3);
  const auto u = ordered_propagator(DenseHamiltonian([&](double) { return h; }), 0.0, 1.3, 0.05);
  CHECK((u - oracle::expm_hermitian(h, 1.3)).norm() < 1e-12);

  // H(t) = cos(t) Z has the exact propagator exp(-i sin(t) Z).
  const DenseHamiltonian ht = [](double t) { return ComplexMatrix(std::cos(t) * sigma_z()); };
  const auto v = ordered_propagator(ht, 0.0, 2.0, 0.01);
  CHECK((v - unitary_exp(sigma_z(), std::sin(2.0))).norm() < 1e-11);
}

TEST_CASE("CF4 propagator converges at fourth order") {
  const DenseHamiltonian h = [](double t) {
    return ComplexMatrix(sigma_z() + std::sin(3.0 * t) * sigma_x() + t * sigma_y());
  };
  const auto ref = oracle::rk4(h, identity(2), 0.0, 1.0, 200000);
  const double e1 = (ordered_propagator(h, 0.0, 1.0, 0.1) - ref).norm();
  const double e2 = (ordered_propagator(h, 0.0, 1.0, 0.05) - ref).norm();
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("sparse propagator and block application match the dense scheme") {
  oracle::Gen gen(9);
  const auto a = gen.hermitian(6), b = gen.hermitian(6);
  const DenseHamiltonian dense = [&](double t) { return ComplexMatrix(a + std::cos(t) * b); };
  const SparseHamiltonian sparse = [&](double t) { return SparseComplexMatrix(dense(t).sparseView()); };
  const auto ud = ordered_propagator(dense, 0.0, 0.8, 0.02);
  const auto us = ordered_propagator(sparse, 0.0, 0.8, 0.02);
  CHECK((ud - us).norm() < 1e-11);
  const auto block = ordered_apply(sparse, 0.0, 0.8, 0.02, identity(6).leftCols(2));
  CHECK((block - ud.leftCols(2)).norm() < 1e-11);
  CHECK(default_step(1.0, 10.0) == doctest::Approx(0.001));
  CHECK(default_step(0.1, 0.0) == doctest::Approx(0.0005));
}

TEST_CASE("expm_action") {
  oracle::Gen gen(13);
  const auto h = gen.hermitian(8);
  const ComplexMatrix x = gen.matrix(8).leftCols(3);
  const auto y = expm_action(SparseComplexMatrix(h.sparseView()), 0.3, x);
  CHECK((y - oracle::expm_hermitian(h, 0.3) * x).norm() < 1e-12);
}

TEST_CASE("partial trace of a product state") {
  oracle::Gen gen(17);
  const auto a = gen.density(2), b = gen.density(4);
  const std::array<int, 2> dims{2, 4};
  const std::array<int, 1> keep0{0}, keep1{1};
  CHECK((partial_trace(kron(a, b), dims, keep0) - a).norm() < 1e-14);
  CHECK((partial_trace(kron(a, b), dims, keep1) - b).norm() < 1e-14);
}
