#pragma once

// Dense operator and superoperator algebra on small Hilbert spaces, plus the
// time-ordered propagators used by every dynamics routine in the library.
//
// Conventions: hbar = 1, dense matrices are Eigen column-major, and the
// Hilbert-Schmidt vectorization is column stacking, so vec(A X B) =
// (B^T (x) A) vec(X). Tensor products put the first factor in the most
// significant index position, matching Eigen::kroneckerProduct.

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace decoshield::core {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseComplexMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Pauli matrices and friends, mostly for tests and scenario construction.
ComplexMatrix identity(int dim);
ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b);

// Largest singular value.
double op_norm(const ComplexMatrix& a);
double hermiticity_defect(const ComplexMatrix& a);
bool all_finite(const ComplexMatrix& a);

// Tr(A* B).
Complex hs_inner(const ComplexMatrix& a, const ComplexMatrix& b);

// Half the trace norm of a - b; both arguments are assumed Hermitian.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

// Throws ArgumentError unless rho is Hermitian, unit trace and PSD within tol.
void require_density_matrix(const ComplexMatrix& rho, double tol = 1e-10);

enum class SuperKind { left, right, commutator };

// Linear map on d x d matrices, held as its d^2 x d^2 matrix in the
// column-stacked Hilbert-Schmidt basis.
class SuperOperator {
 public:
  SuperOperator() = default;
  explicit SuperOperator(int dim);
  SuperOperator(int dim, ComplexMatrix matrix);

  static SuperOperator identity(int dim);
  static SuperOperator zero(int dim);

  int dim() const { return dim_; }
  const ComplexMatrix& matrix() const { return matrix_; }

  ComplexMatrix apply(const ComplexMatrix& x) const;
  ComplexMatrix operator()(const ComplexMatrix& x) const { return apply(x); }

  SuperOperator& operator+=(const SuperOperator& other);
  SuperOperator& operator-=(const SuperOperator& other);
  SuperOperator& operator*=(Complex s);

  friend SuperOperator operator+(SuperOperator a, const SuperOperator& b) { return a += b; }
  friend SuperOperator operator-(SuperOperator a, const SuperOperator& b) { return a -= b; }
  friend SuperOperator operator*(Complex s, SuperOperator a) { return a *= s; }
  // Composition: (a * b)(X) = a(b(X)).
  friend SuperOperator operator*(const SuperOperator& a, const SuperOperator& b);

 private:
  int dim_ = 0;
  ComplexMatrix matrix_;
};

SuperOperator build_superop(SuperKind kind, const ComplexMatrix& a);
inline SuperOperator left_mult(const ComplexMatrix& a) { return build_superop(SuperKind::left, a); }
inline SuperOperator right_mult(const ComplexMatrix& a) { return build_superop(SuperKind::right, a); }

ComplexVector vec(const ComplexMatrix& x);
ComplexMatrix unvec(const ComplexVector& v, int dim);

// Eigen-decomposition of a Hermitian matrix with degenerate eigenvalues
// grouped into clusters. `eigenvalues` lists one value per cluster, ascending.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<ComplexMatrix> projectors;
  std::vector<int> multiplicity;
  // Full orthonormal eigenbasis (columns), ordered consistently with clusters.
  ComplexMatrix eigenvectors;
  RealVector all_eigenvalues;

  bool simple() const;
};

SpectralDecomposition spectral_decomposition(const ComplexMatrix& h, double cluster_tol = 1e-9);

ComplexMatrix matrix_exp(const ComplexMatrix& a);

// exp(-i t H) for Hermitian H, via the eigenbasis.
ComplexMatrix unitary_exp(const ComplexMatrix& h, double t);

// Closest unitary (or isometry, for tall input) in Frobenius norm: the
// polar factor.
ComplexMatrix polar_unitary(const ComplexMatrix& m);

using DenseHamiltonian = std::function<ComplexMatrix(double)>;
using SparseHamiltonian = std::function<SparseComplexMatrix(double)>;

// Default integrator step for a T-periodic problem: min(T/200, 0.01/max|H|).
double default_step(double period, double max_norm);

// U(t1, t0) for i dU/dt = H(t) U with a fourth-order commutator-free Magnus
// scheme (two exponentials per step, Gauss-Legendre nodes). The interval is
// split into ceil((t1-t0)/step) equal steps and U is projected back onto the
// unitary group after every step.
ComplexMatrix ordered_propagator(const DenseHamiltonian& h, double t0, double t1, double step);

// Same scheme for large sparse generators. The exponentials are applied to
// the running propagator by a truncated Taylor series instead of being formed.
ComplexMatrix ordered_propagator(const SparseHamiltonian& h, double t0, double t1, double step);

// U(t1, t0) X for a block of columns X, which should be orthonormal; the
// block is re-orthonormalized after every step.
ComplexMatrix ordered_apply(const SparseHamiltonian& h, double t0, double t1, double step, ComplexMatrix x);

// exp(-i dt H) X for sparse Hermitian H, Taylor series to machine precision.
ComplexMatrix expm_action(const SparseComplexMatrix& h, double dt, const ComplexMatrix& x);

// Trace over every factor not listed in `keep`. Factors are ordered most
// significant first.
ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> dims,
                            std::span<const int> keep);

}  // namespace decoshield::core
