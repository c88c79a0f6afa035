#include "decoshield/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "decoshield/errors.hpp"

namespace decoshield::core {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
    throw ArgumentError(os.str());
  }
}

double sparse_row_norm(const SparseComplexMatrix& h) {
  double best = 0.0;
  for (int r = 0; r < h.outerSize(); ++r) {
    double s = 0.0;
    for (SparseComplexMatrix::InnerIterator it(h, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

ComplexMatrix identity(int dim) { return ComplexMatrix::Identity(dim, dim); }

ComplexMatrix sigma_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix sigma_y() {
  ComplexMatrix m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

ComplexMatrix sigma_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }
ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b + b * a; }

double op_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues()(0);
}

double hermiticity_defect(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i].real()) || !std::isfinite(a.data()[i].imag())) return false;
  }
  return true;
}

Complex hs_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError("hs_inner: dimension mismatch");
  }
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += std::conj(a.data()[i]) * b.data()[i];
  return acc;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError("trace_distance: dimension mismatch");
  }
  ComplexMatrix d = a - b;
  d = 0.5 * (d + d.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

void require_density_matrix(const ComplexMatrix& rho, double tol) {
  require_square(rho, "density matrix");
  if (!all_finite(rho)) throw ArgumentError("density matrix: non-finite entries");
  if (hermiticity_defect(rho) > tol) throw ArgumentError("density matrix: not Hermitian");
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > tol) {
    std::ostringstream os;
    os << "density matrix: trace " << tr.real() << " differs from 1";
    throw ArgumentError(os.str());
  }
  ComplexMatrix h = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) throw ArgumentError("density matrix: not positive semidefinite");
}

// ---------------------------------------------------------------------------
// Superoperators

SuperOperator::SuperOperator(int dim) : dim_(dim), matrix_(ComplexMatrix::Zero(dim * dim, dim * dim)) {}

SuperOperator::SuperOperator(int dim, ComplexMatrix matrix) : dim_(dim), matrix_(std::move(matrix)) {
  if (matrix_.rows() != dim * dim || matrix_.cols() != dim * dim) {
    throw ArgumentError("SuperOperator: matrix must be d^2 x d^2");
  }
}

SuperOperator SuperOperator::identity(int dim) { return {dim, ComplexMatrix::Identity(dim * dim, dim * dim)}; }
SuperOperator SuperOperator::zero(int dim) { return SuperOperator(dim); }

ComplexMatrix SuperOperator::apply(const ComplexMatrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_) throw ArgumentError("SuperOperator::apply: dimension mismatch");
  return unvec(matrix_ * vec(x), dim_);
}

SuperOperator& SuperOperator::operator+=(const SuperOperator& other) {
  if (other.dim_ != dim_) throw ArgumentError("SuperOperator: dimension mismatch");
  matrix_ += other.matrix_;
  return *this;
}

SuperOperator& SuperOperator::operator-=(const SuperOperator& other) {
  if (other.dim_ != dim_) throw ArgumentError("SuperOperator: dimension mismatch");
  matrix_ -= other.matrix_;
  return *this;
}

SuperOperator& SuperOperator::operator*=(Complex s) {
  matrix_ *= s;
  return *this;
}

SuperOperator operator*(const SuperOperator& a, const SuperOperator& b) {
  if (a.dim() != b.dim()) throw ArgumentError("SuperOperator: dimension mismatch");
  return {a.dim(), a.matrix() * b.matrix()};
}

SuperOperator build_superop(SuperKind kind, const ComplexMatrix& a) {
  require_square(a, "build_superop");
  const int d = static_cast<int>(a.rows());
  const ComplexMatrix id = ComplexMatrix::Identity(d, d);
  switch (kind) {
    case SuperKind::left:
      return {d, kron(id, a)};
    case SuperKind::right:
      return {d, kron(a.transpose(), id)};
    case SuperKind::commutator:
      return {d, kron(id, a) - kron(a.transpose(), id)};
  }
  throw ArgumentError("build_superop: unknown kind");
}

ComplexVector vec(const ComplexMatrix& x) {
  return Eigen::Map<const ComplexVector>(x.data(), x.size());
}

ComplexMatrix unvec(const ComplexVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) throw ArgumentError("unvec: size mismatch");
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

// ---------------------------------------------------------------------------
// Spectral tools

bool SpectralDecomposition::simple() const {
  return std::all_of(multiplicity.begin(), multiplicity.end(), [](int m) { return m == 1; });
}

SpectralDecomposition spectral_decomposition(const ComplexMatrix& h, double cluster_tol) {
  require_square(h, "spectral_decomposition");
  if (!all_finite(h)) throw ArgumentError("spectral_decomposition: non-finite entries");
  if (hermiticity_defect(h) > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    throw ArgumentError("spectral_decomposition: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()));
  SpectralDecomposition out;
  out.eigenvectors = es.eigenvectors();
  out.all_eigenvalues = es.eigenvalues();
  const auto& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  const int n = static_cast<int>(ev.size());
  int start = 0;
  while (start < n) {
    int stop = start + 1;
    while (stop < n && ev(stop) - ev(stop - 1) <= cluster_tol * scale) ++stop;
    ComplexMatrix p = ComplexMatrix::Zero(n, n);
    double mean = 0.0;
    for (int k = start; k < stop; ++k) {
      p += out.eigenvectors.col(k) * out.eigenvectors.col(k).adjoint();
      mean += ev(k);
    }
    out.eigenvalues.push_back(mean / (stop - start));
    out.projectors.push_back(std::move(p));
    out.multiplicity.push_back(stop - start);
    start = stop;
  }
  return out;
}

ComplexMatrix matrix_exp(const ComplexMatrix& a) {
  require_square(a, "matrix_exp");
  if (!all_finite(a)) throw ArgumentError("matrix_exp: non-finite entries");
  return a.exp();
}

ComplexMatrix unitary_exp(const ComplexMatrix& h, double t) {
  require_square(h, "unitary_exp");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()));
  const ComplexVector phases = (-kI * t * es.eigenvalues().cast<Complex>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

ComplexMatrix polar_unitary(const ComplexMatrix& m) {
  if (m.size() == 0 || m.rows() < m.cols()) {
    throw ArgumentError("polar_unitary: expected a square or tall non-empty matrix");
  }
  const Eigen::Index n = m.cols();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  if (m.rows() > 64) {
    // Newton-Schulz converges quadratically once the input is near-isometric,
    // which is the only situation the integrators produce.
    ComplexMatrix x = m;
    for (int iter = 0; iter < 8; ++iter) {
      ComplexMatrix gram;
      gram.noalias() = x.adjoint() * x;
      const double defect = (gram - id).cwiseAbs().maxCoeff();
      if (defect < 1e-15) return x;
      if (defect > 0.25) break;
      ComplexMatrix next;
      next.noalias() = x * (1.5 * id - 0.5 * gram);
      x.swap(next);
      if (defect < 1e-7) return x;
    }
  }
  Eigen::BDCSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// ---------------------------------------------------------------------------
// Propagators

double default_step(double period, double max_norm) {
  double step = period / 200.0;
  if (max_norm > 0.0) step = std::min(step, 0.01 / max_norm);
  return step;
}

namespace {

// Commutator-free Magnus of order four: nodes 1/2 -+ sqrt(3)/6, and the
// exponent applied first weights the earlier node more heavily.
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kNode1 = 0.5 - kSqrt3 / 6.0;
constexpr double kNode2 = 0.5 + kSqrt3 / 6.0;
constexpr double kWeightMajor = 0.25 + kSqrt3 / 6.0;
constexpr double kWeightMinor = 0.25 - kSqrt3 / 6.0;

int step_count(double t0, double t1, double step) {
  if (!(t1 >= t0)) throw ArgumentError("ordered_propagator: requires t1 >= t0");
  if (!(step > 0.0)) throw ArgumentError("ordered_propagator: requires step > 0");
  if (t1 == t0) return 0;
  return static_cast<int>(std::ceil((t1 - t0) / step - 1e-9));
}

void require_hermitian_sample(const ComplexMatrix& h, double t) {
  if (!all_finite(h)) throw ArgumentError("ordered_propagator: non-finite Hamiltonian sample");
  if (hermiticity_defect(h) > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "ordered_propagator: Hamiltonian sample at t=" << t << " is not Hermitian";
    throw ArgumentError(os.str());
  }
}

void require_hermitian_sample(const SparseComplexMatrix& h, double t) {
  SparseComplexMatrix diff = h - SparseComplexMatrix(h.adjoint());
  double defect = 0.0;
  double scale = 1.0;
  for (int r = 0; r < diff.outerSize(); ++r) {
    for (SparseComplexMatrix::InnerIterator it(diff, r); it; ++it) defect = std::max(defect, std::abs(it.value()));
  }
  for (int r = 0; r < h.outerSize(); ++r) {
    for (SparseComplexMatrix::InnerIterator it(h, r); it; ++it) {
      if (!std::isfinite(it.value().real()) || !std::isfinite(it.value().imag())) {
        throw ArgumentError("ordered_propagator: non-finite Hamiltonian sample");
      }
      scale = std::max(scale, std::abs(it.value()));
    }
  }
  if (defect > 1e-10 * scale) {
    std::ostringstream os;
    os << "ordered_propagator: Hamiltonian sample at t=" << t << " is not Hermitian";
    throw ArgumentError(os.str());
  }
}

}  // namespace

ComplexMatrix ordered_propagator(const DenseHamiltonian& h, double t0, double t1, double step) {
  const int n = step_count(t0, t1, step);
  ComplexMatrix first = h(t0);
  require_hermitian_sample(first, t0);
  const Eigen::Index dim = first.rows();
  ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
  if (n == 0) return u;
  const double dt = (t1 - t0) / n;
  for (int s = 0; s < n; ++s) {
    const double ts = t0 + s * dt;
    const ComplexMatrix h1 = h(ts + kNode1 * dt);
    const ComplexMatrix h2 = h(ts + kNode2 * dt);
    require_hermitian_sample(h1, ts + kNode1 * dt);
    require_hermitian_sample(h2, ts + kNode2 * dt);
    const ComplexMatrix early = unitary_exp(kWeightMajor * h1 + kWeightMinor * h2, dt);
    const ComplexMatrix late = unitary_exp(kWeightMinor * h1 + kWeightMajor * h2, dt);
    u = polar_unitary(late * early * u);
  }
  return u;
}

ComplexMatrix expm_action(const SparseComplexMatrix& h, double dt, const ComplexMatrix& x) {
  const double norm = sparse_row_norm(h) * std::abs(dt);
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm / 0.5)));
  const double sub = dt / substeps;
  ComplexMatrix y = x;
  ComplexMatrix term;
  ComplexMatrix next;
  for (int s = 0; s < substeps; ++s) {
    term = y;
    const double ynorm = y.cwiseAbs().maxCoeff();
    for (int k = 1; k < 40; ++k) {
      next.noalias() = h * term;
      term = next * Complex(0.0, -sub / k);
      y += term;
      if (term.cwiseAbs().maxCoeff() <= 1e-17 * ynorm) break;
    }
  }
  return y;
}

ComplexMatrix ordered_apply(const SparseHamiltonian& h, double t0, double t1, double step, ComplexMatrix x) {
  const int n = step_count(t0, t1, step);
  const SparseComplexMatrix first = h(t0);
  require_hermitian_sample(first, t0);
  if (x.rows() != first.rows()) throw ArgumentError("ordered_apply: block height does not match the Hamiltonian");
  if (n == 0) return x;
  const double dt = (t1 - t0) / n;
  for (int s = 0; s < n; ++s) {
    const double ts = t0 + s * dt;
    const SparseComplexMatrix h1 = h(ts + kNode1 * dt);
    const SparseComplexMatrix h2 = h(ts + kNode2 * dt);
    require_hermitian_sample(h1, ts + kNode1 * dt);
    require_hermitian_sample(h2, ts + kNode2 * dt);
    const SparseComplexMatrix early = kWeightMajor * h1 + kWeightMinor * h2;
    const SparseComplexMatrix late = kWeightMinor * h1 + kWeightMajor * h2;
    x = polar_unitary(expm_action(late, dt, expm_action(early, dt, x)));
  }
  return x;
}

ComplexMatrix ordered_propagator(const SparseHamiltonian& h, double t0, double t1, double step) {
  const Eigen::Index dim = h(t0).rows();
  return ordered_apply(h, t0, t1, step, ComplexMatrix::Identity(dim, dim));
}

// ---------------------------------------------------------------------------

ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> dims, std::span<const int> keep) {
  require_square(rho, "partial_trace");
  if (dims.empty()) throw ArgumentError("partial_trace: empty dimension list");
  long total = 1;
  for (int d : dims) {
    if (d <= 0) throw ArgumentError("partial_trace: dimensions must be positive");
    total *= d;
  }
  if (total != rho.rows()) throw ArgumentError("partial_trace: product of dims does not match matrix size");
  const int nf = static_cast<int>(dims.size());
  std::vector<bool> kept(nf, false);
  for (int k : keep) {
    if (k < 0 || k >= nf) throw ArgumentError("partial_trace: keep index out of range");
    kept[k] = true;
  }
  // Strides of the full space (most significant first).
  std::vector<long> stride(nf, 1);
  for (int f = nf - 2; f >= 0; --f) stride[f] = stride[f + 1] * dims[f + 1];
  long kept_dim = 1;
  for (int f = 0; f < nf; ++f) {
    if (kept[f]) kept_dim *= dims[f];
  }
  // Map every full index to (kept index, traced index).
  std::vector<long> kept_index(total), traced_index(total);
  for (long i = 0; i < total; ++i) {
    long ki = 0, ti = 0;
    for (int f = 0; f < nf; ++f) {
      const long digit = (i / stride[f]) % dims[f];
      if (kept[f]) {
        ki = ki * dims[f] + digit;
      } else {
        ti = ti * dims[f] + digit;
      }
    }
    kept_index[i] = ki;
    traced_index[i] = ti;
  }
  ComplexMatrix out = ComplexMatrix::Zero(kept_dim, kept_dim);
  for (long j = 0; j < total; ++j) {
    for (long i = 0; i < total; ++i) {
      if (traced_index[i] == traced_index[j]) out(kept_index[i], kept_index[j]) += rho(i, j);
    }
  }
  return out;
}

}  // namespace decoshield::core
