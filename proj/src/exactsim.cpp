#include "decoshield/exactsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "decoshield/errors.hpp"

namespace decoshield::exactsim {

namespace {

using core::Complex;
using Triplet = Eigen::Triplet<Complex>;

SparseComplexMatrix sparse_identity(long n) {
  SparseComplexMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseComplexMatrix sparse_kron(const ComplexMatrix& a, const SparseComplexMatrix& b) {
  const SparseComplexMatrix as = a.sparseView();
  SparseComplexMatrix out = Eigen::kroneckerProduct(as, b);
  out.prune(Complex(0.0, 0.0));
  return out;
}

double max_abs(const SparseComplexMatrix& m) {
  double best = 0.0;
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseComplexMatrix::InnerIterator it(m, r); it; ++it) best = std::max(best, std::abs(it.value()));
  }
  return best;
}

void require_size(const TotalModel& tm) {
  if (tm.modes.size() < 1) throw ArgumentError("total model: at least one reservoir mode is required");
  if (tm.modes.size() > 30 || tm.total_dim() > kMaxTotalDim) {
    std::ostringstream os;
    os << "total model dimension d 2^N = " << tm.system.dim() << " x 2^" << tm.modes.size()
       << " exceeds the desk-scale limit " << kMaxTotalDim;
    throw ResourceError(os.str());
  }
  if (tm.schedule.dim() != tm.system.dim()) throw ArgumentError("total model: schedule dimension mismatch");
}

}  // namespace

std::vector<SparseComplexMatrix> annihilators(int n_modes) {
  if (n_modes < 1 || n_modes > 30) throw ArgumentError("annihilators: mode count must lie in [1, 30]");
  const long dim = 1L << n_modes;
  std::vector<SparseComplexMatrix> out;
  for (int j = 0; j < n_modes; ++j) {
    const int pos = n_modes - 1 - j;
    std::vector<Triplet> trips;
    trips.reserve(dim / 2);
    for (long s = 0; s < dim; ++s) {
      if (((s >> pos) & 1L) == 0) continue;
      // Modes before j sit in the more significant bits.
      const int parity = std::popcount(static_cast<unsigned long>(s >> (pos + 1))) & 1;
      trips.emplace_back(s ^ (1L << pos), s, parity ? -1.0 : 1.0);
    }
    SparseComplexMatrix a(dim, dim);
    a.setFromTriplets(trips.begin(), trips.end());
    out.push_back(std::move(a));
  }
  return out;
}

double car_defect(const std::vector<SparseComplexMatrix>& a) {
  double defect = 0.0;
  if (a.empty()) return defect;
  const SparseComplexMatrix id = sparse_identity(a.front().rows());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      const SparseComplexMatrix adj = a[j].adjoint();
      SparseComplexMatrix mixed = a[i] * adj + adj * a[i];
      if (i == j) mixed -= id;
      const SparseComplexMatrix same = a[i] * a[j] + a[j] * a[i];
      defect = std::max({defect, max_abs(mixed), max_abs(same)});
    }
  }
  return defect;
}

SparseComplexMatrix reservoir_hamiltonian(const reservoir::ModeSet& modes) {
  const int n = modes.size();
  const long dim = 1L << n;
  std::vector<Triplet> trips;
  for (long s = 0; s < dim; ++s) {
    double e = 0.0;
    for (int j = 0; j < n; ++j) {
      if ((s >> (n - 1 - j)) & 1L) e += modes.omega[j];
    }
    if (e != 0.0) trips.emplace_back(s, s, e);
  }
  SparseComplexMatrix h(dim, dim);
  h.setFromTriplets(trips.begin(), trips.end());
  return h;
}

SparseComplexMatrix field_operator(const reservoir::ModeSet& modes) {
  const auto a = annihilators(modes.size());
  SparseComplexMatrix phi(a.front().rows(), a.front().cols());
  for (int j = 0; j < modes.size(); ++j) {
    const SparseComplexMatrix aj_dag = a[j].adjoint();
    phi += (modes.coupling[j] / std::sqrt(2.0)) * (a[j] + aj_dag);
  }
  return phi;
}

SparseComplexMatrix build_total_generator(const TotalModel& tm, double t) {
  require_size(tm);
  const SparseComplexMatrix id_r = sparse_identity(tm.reservoir_dim());
  const ComplexMatrix id_s = ComplexMatrix::Identity(tm.system.dim(), tm.system.dim());
  SparseComplexMatrix h = sparse_kron(tm.system.hs() + tm.schedule.hc(t), id_r);
  h += sparse_kron(id_s, reservoir_hamiltonian(tm.modes));
  if (tm.lambda != 0.0) h += sparse_kron(tm.lambda * tm.system.q(), field_operator(tm.modes));
  return h;
}

// ---------------------------------------------------------------------------

RotatingGenerator::RotatingGenerator(const TotalModel& tm)
    : schedule_(tm.schedule), q_(tm.system.q()), lambda_(tm.lambda) {
  require_size(tm);
  const int d = tm.system.dim();
  const SparseComplexMatrix id_r = sparse_identity(tm.reservoir_dim());
  const SparseComplexMatrix h_r = reservoir_hamiltonian(tm.modes);
  h0_ = sparse_kron(tm.system.hs(), id_r);
  h0_ += sparse_kron(ComplexMatrix::Identity(d, d), h_r);
  const SparseComplexMatrix phi = field_operator(tm.modes);
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      ComplexMatrix e = ComplexMatrix::Zero(d, d);
      e(m, n) = 1.0;
      coupling_.push_back(sparse_kron(e, phi));
    }
  }
  double phi_sq = 0.0;
  for (double f : tm.modes.coupling) phi_sq += f * f;
  double h_r_max = 0.0;
  for (double w : tm.modes.omega) h_r_max += std::max(w, 0.0);
  norm_bound_ = tm.system.hs_norm() + h_r_max + std::abs(lambda_) * core::op_norm(q_) * std::sqrt(0.5 * phi_sq);
  static_ = lambda_ == 0.0 || schedule_.is_zero() ||
            core::op_norm(core::commutator(q_, schedule_.direction())) <= 1e-14;
  const ComplexMatrix vt = control::vc_at(schedule_, schedule_.period());
  periodic_ = static_ || core::op_norm(vt * q_ * vt.adjoint() - q_) < 1e-12;
}

SparseComplexMatrix RotatingGenerator::operator()(double t) const {
  SparseComplexMatrix h = h0_;
  if (lambda_ == 0.0) return h;
  const ComplexMatrix v = schedule_.rotation(schedule_.phase(t));
  ComplexMatrix qt = v * q_ * v.adjoint();
  qt = 0.5 * (qt + qt.adjoint());
  const int d = static_cast<int>(qt.rows());
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      const Complex c = lambda_ * qt(m, n);
      if (c != Complex(0.0, 0.0)) h += c * coupling_[m * d + n];
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

std::vector<double> thermal_diagonal(const reservoir::ModeSet& modes) {
  const int n = modes.size();
  const long dim = 1L << n;
  std::vector<double> p(dim);
  for (long s = 0; s < dim; ++s) {
    double w = 1.0;
    for (int j = 0; j < n; ++j) {
      const bool occupied = (s >> (n - 1 - j)) & 1L;
      w *= occupied ? modes.occupation[j] : 1.0 - modes.occupation[j];
    }
    p[s] = w;
  }
  return p;
}

ComplexMatrix thermal_reservoir_state(const reservoir::ModeSet& modes) {
  const auto p = thermal_diagonal(modes);
  ComplexMatrix rho = ComplexMatrix::Zero(static_cast<long>(p.size()), static_cast<long>(p.size()));
  for (std::size_t s = 0; s < p.size(); ++s) rho(static_cast<long>(s), static_cast<long>(s)) = p[s];
  return rho;
}

// ---------------------------------------------------------------------------

double Trajectory::coherence(std::size_t i, int m, int n) const {
  const ComplexMatrix r = eigenbasis.adjoint() * reduced.at(i) * eigenbasis;
  return std::abs(r(m, n));
}

double Trajectory::population(std::size_t i, int k) const {
  const ComplexMatrix r = eigenbasis.adjoint() * reduced.at(i) * eigenbasis;
  return r(k, k).real();
}

namespace {

std::vector<double> sample_grid(double t_final, double sample_dt) {
  std::vector<double> times;
  const long n = static_cast<long>(std::floor(t_final / sample_dt + 1e-9));
  for (long i = 0; i <= n; ++i) times.push_back(static_cast<double>(i) * sample_dt);
  if (t_final - times.back() > 1e-9 * std::max(1.0, t_final)) times.push_back(t_final);
  return times;
}

// Applies U~(b, a) to x, splitting at kick times.
class Stepper {
 public:
  Stepper(const RotatingGenerator& gen, const control::ControlSchedule& schedule, double step)
      : gen_(gen), schedule_(schedule), step_(step) {
    const long dim = gen(0.0).rows();
    // A dense eigenbasis is exact for static generators but only affordable
    // at density-matrix sizes.
    use_eig_ = gen.is_static() && dim <= kDensityDimLimit;
    if (use_eig_) {
      const ComplexMatrix h = ComplexMatrix(gen(0.0));
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()));
      vecs_ = es.eigenvectors();
      vals_ = es.eigenvalues();
    }
  }

  ComplexMatrix advance(double a, double b, ComplexMatrix x) const {
    if (b <= a) return x;
    if (use_eig_) {
      const core::ComplexVector ph = (Complex(0.0, -(b - a)) * vals_.cast<Complex>()).array().exp();
      ComplexMatrix y;
      y.noalias() = vecs_.adjoint() * x;
      y = ph.asDiagonal() * y;
      ComplexMatrix z;
      z.noalias() = vecs_ * y;
      return z;
    }
    std::vector<double> cuts{a};
    for (double tk : schedule_.kick_times(a, b)) cuts.push_back(tk);
    cuts.push_back(b);
    auto h = [this](double t) { return gen_(t); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      x = core::ordered_apply(h, cuts[i], cuts[i + 1], step_, std::move(x));
    }
    return x;
  }

 private:
  const RotatingGenerator& gen_;
  const control::ControlSchedule& schedule_;
  double step_;
  bool use_eig_ = false;
  ComplexMatrix vecs_;
  Eigen::VectorXd vals_;
};

// Orthonormal eigenvectors and weights of rho_s0 with nonzero weight.
std::pair<ComplexMatrix, std::vector<double>> state_factor(const ComplexMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (rho + rho.adjoint()));
  std::vector<int> keep;
  std::vector<double> w;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) > 1e-15) {
      keep.push_back(k);
      w.push_back(es.eigenvalues()(k));
    }
  }
  ComplexMatrix v(rho.rows(), static_cast<long>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) v.col(static_cast<long>(c)) = es.eigenvectors().col(keep[c]);
  return {v, w};
}

// Tr_R of sum_c w_c y_c y_c* for columns y_c of the total space.
ComplexMatrix reduce_columns(const ComplexMatrix& y, const std::vector<double>& w, int d, long r_dim) {
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  for (long c = 0; c < y.cols(); ++c) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        // dot() conjugates its left operand: sum_r y(i r) conj(y(j r)).
        out(i, j) += w[static_cast<std::size_t>(c)] *
                     y.col(c).segment(j * r_dim, r_dim).dot(y.col(c).segment(i * r_dim, r_dim));
      }
    }
  }
  return out;
}

struct Sample {
  ComplexMatrix reduced_rotating;
  double trace = 0.0;
  double purity = 0.0;
};

void check_trace(double trace, double t) {
  if (!(std::abs(trace - 1.0) <= 1e-6)) {
    std::ostringstream os;
    os << "evolve: total trace drifted to " << std::setprecision(12) << trace << " at t = " << t
       << "; reduce the integrator step";
    throw NumericError(os.str());
  }
}

}  // namespace

Trajectory evolve(const TotalModel& tm, const ComplexMatrix& rho_s0, double t_final, double sample_dt,
                  const EvolveOptions& options) {
  require_size(tm);
  core::require_density_matrix(rho_s0);
  if (rho_s0.rows() != tm.system.dim()) throw ArgumentError("evolve: initial state dimension mismatch");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ArgumentError("evolve: t_final must be >= 0");
  if (!(sample_dt > 0.0)) throw ArgumentError("evolve: sample_dt must be positive");
  if (options.samples < 1) throw ArgumentError("evolve: sample budget must be positive");

  const int d = tm.system.dim();
  const long r_dim = tm.reservoir_dim();
  const long dim = tm.total_dim();
  const RotatingGenerator gen(tm);
  const double period = tm.schedule.period();
  const double step = options.step > 0.0 ? options.step : core::default_step(period, gen.norm_bound());
  const Stepper stepper(gen, tm.schedule, step);

  Method method = options.method;
  if (method == Method::automatic) method = dim > kDensityDimLimit ? Method::unravel : Method::density;

  Trajectory traj;
  traj.times = sample_grid(t_final, sample_dt);
  traj.eigenbasis = tm.system.spectrum().eigenvectors;
  traj.step = step;

  const auto [s_vecs, s_weights] = state_factor(rho_s0);
  const auto p_r = thermal_diagonal(tm.modes);
  std::vector<Sample> samples;

  if (method == Method::density) {
    traj.method = gen.is_static() ? "density-static" : (gen.is_periodic() && options.use_floquet ? "density-floquet"
                                                                                                 : "density");
    // rho_0 = L L* with L = (V sqrt(w)) (x) sqrt(p_R); U~ L is assembled from
    // the columns of U~ directly.
    std::vector<std::pair<long, double>> factor_cols;  // (reservoir index, sqrt p)
    for (long r = 0; r < r_dim; ++r) {
      if (p_r[static_cast<std::size_t>(r)] > 0.0) factor_cols.emplace_back(r, std::sqrt(p_r[static_cast<std::size_t>(r)]));
    }
    const long n_cols = static_cast<long>(s_weights.size() * factor_cols.size());
    auto apply_factor = [&](const ComplexMatrix& u) {
      ComplexMatrix y = ComplexMatrix::Zero(dim, n_cols);
      long c = 0;
      for (std::size_t k = 0; k < s_weights.size(); ++k) {
        const double sw = std::sqrt(s_weights[k]);
        for (const auto& [r, sp] : factor_cols) {
          for (int i = 0; i < d; ++i) {
            const Complex coeff = s_vecs(i, static_cast<long>(k)) * (sw * sp);
            if (coeff != Complex(0.0, 0.0)) y.col(c) += coeff * u.col(i * r_dim + r);
          }
          ++c;
        }
      }
      return y;
    };
    auto measure = [&](const ComplexMatrix& u, double t) {
      const ComplexMatrix y = apply_factor(u);
      Sample s;
      s.reduced_rotating = reduce_columns(y, std::vector<double>(static_cast<std::size_t>(n_cols), 1.0), d, r_dim);
      s.trace = y.squaredNorm();
      ComplexMatrix gram;
      gram.noalias() = y.adjoint() * y;
      s.purity = gram.squaredNorm();
      check_trace(s.trace, t);
      return s;
    };

    const ComplexMatrix id = ComplexMatrix::Identity(dim, dim);
    if (gen.is_static()) {
      for (double t : traj.times) samples.push_back(measure(stepper.advance(0.0, t, id), t));
    } else if (gen.is_periodic() && options.use_floquet) {
      const ComplexMatrix floquet = stepper.advance(0.0, period, id);
      std::map<long, ComplexMatrix> power_cache;  // F^m by m
      auto power = [&](long m) -> const ComplexMatrix& {
        auto it = power_cache.find(m);
        if (it != power_cache.end()) return it->second;
        ComplexMatrix result = id, base = floquet;
        for (long e = m; e > 0; e >>= 1) {
          if (e & 1L) result = (result * base).eval();
          if (e > 1) base = (base * base).eval();
        }
        return power_cache.emplace(m, core::polar_unitary(result)).first->second;
      };
      std::map<long long, ComplexMatrix> offset_cache;
      ComplexMatrix w = id;
      long m_now = 0;
      for (double t : traj.times) {
        long m = static_cast<long>(std::floor(t / period + 1e-9));
        double r = t - static_cast<double>(m) * period;
        if (r < 1e-12 * period) r = 0.0;
        if (m > m_now) {
          w = core::polar_unitary((power(m - m_now) * w).eval());
          m_now = m;
        }
        if (r == 0.0) {
          samples.push_back(measure(w, t));
        } else {
          const long long key = std::llround(r / period * 1e12);
          auto it = offset_cache.find(key);
          if (it == offset_cache.end()) it = offset_cache.emplace(key, stepper.advance(0.0, r, id)).first;
          samples.push_back(measure(it->second * w, t));
        }
      }
    } else {
      ComplexMatrix u = id;
      double t_prev = 0.0;
      for (double t : traj.times) {
        u = stepper.advance(t_prev, t, std::move(u));
        t_prev = t;
        samples.push_back(measure(u, t));
      }
    }
  } else {
    traj.method = "unravel";
    // Occupation bitstrings: exact enumeration when it fits the budget.
    std::map<long, double> configs;
    if (r_dim <= options.samples) {
      for (long r = 0; r < r_dim; ++r) {
        if (p_r[static_cast<std::size_t>(r)] > 0.0) configs[r] = p_r[static_cast<std::size_t>(r)];
      }
    } else {
      std::mt19937_64 rng(options.seed);
      const int n = tm.modes.size();
      for (int s = 0; s < options.samples; ++s) {
        long r = 0;
        for (int j = 0; j < n; ++j) {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          if (u < tm.modes.occupation[j]) r |= 1L << (n - 1 - j);
        }
        configs[r] += 1.0 / options.samples;
      }
    }
    traj.distinct_configurations = static_cast<int>(configs.size());
    const long n_cols = static_cast<long>(configs.size() * s_weights.size());
    ComplexMatrix x = ComplexMatrix::Zero(dim, n_cols);
    std::vector<double> weights;
    long c = 0;
    for (const auto& [r, w] : configs) {
      for (std::size_t k = 0; k < s_weights.size(); ++k) {
        for (int i = 0; i < d; ++i) x(i * r_dim + r, c) = s_vecs(i, static_cast<long>(k));
        weights.push_back(w * s_weights[k]);
        ++c;
      }
    }
    double t_prev = 0.0;
    for (double t : traj.times) {
      x = stepper.advance(t_prev, t, std::move(x));
      t_prev = t;
      Sample s;
      s.reduced_rotating = reduce_columns(x, weights, d, r_dim);
      for (long col = 0; col < x.cols(); ++col) s.trace += weights[static_cast<std::size_t>(col)] * x.col(col).squaredNorm();
      s.purity = std::numeric_limits<double>::quiet_NaN();
      check_trace(s.trace, t);
      samples.push_back(std::move(s));
    }
  }

  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const ComplexMatrix vc = control::vc_at(tm.schedule, t);
    ComplexMatrix red = vc.adjoint() * samples[i].reduced_rotating * vc;
    red = 0.5 * (red + red.adjoint());
    ComplexMatrix ref = control::effective_dynamics(tm.system, tm.schedule, rho_s0, t);
    traj.deviation.push_back(core::trace_distance(red, ref));
    traj.reduced.push_back(std::move(red));
    traj.reference.push_back(std::move(ref));
    traj.total_trace.push_back(samples[i].trace);
    traj.total_purity.push_back(samples[i].purity);
  }
  return traj;
}

// ---------------------------------------------------------------------------

double bound_shape(const BoundShape& b, double t) {
  const double l = std::abs(b.lambda);
  return b.big_c_const * (l + (b.d_parameter * l + 1.0) * b.period + 1.0 - std::exp(-b.c_const * t * l * b.period));
}

DeviationReport compare_with_effective(const Trajectory& traj, const control::SystemModel& model,
                                       const control::ControlSchedule& schedule, const BoundShape& shape,
                                       double horizon) {
  if (traj.times.empty()) throw ArgumentError("compare_with_effective: empty trajectory");
  if (traj.reduced.size() != traj.times.size()) {
    throw ArgumentError("compare_with_effective: states and time grid have different lengths");
  }
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    if (!(traj.times[i] > traj.times[i - 1])) throw ArgumentError("compare_with_effective: time grid not ascending");
  }
  if (traj.times.front() != 0.0) throw ArgumentError("compare_with_effective: time grid must start at 0");
  if (traj.reduced.front().rows() != model.dim() || model.dim() < 2) {
    throw ArgumentError("compare_with_effective: model dimension does not match the trajectory");
  }
  DeviationReport rep;
  rep.horizon = horizon > 0.0 ? horizon : traj.times.back();
  const ComplexMatrix& v = model.spectrum().eigenvectors;
  const ComplexMatrix rho0 = traj.reduced.front();
  const ComplexMatrix rho0_eig = v.adjoint() * rho0 * v;
  const double c0 = std::abs(rho0_eig(0, 1));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t > rep.horizon * (1.0 + 1e-12)) break;
    const ComplexMatrix ref = control::effective_dynamics(model, schedule, rho0, t);
    const double dev = core::trace_distance(traj.reduced[i], ref);
    const ComplexMatrix r_eig = v.adjoint() * traj.reduced[i] * v;
    double drift = 0.0;
    for (int k = 0; k < model.dim(); ++k) drift = std::max(drift, std::abs(r_eig(k, k).real() - rho0_eig(k, k).real()));
    rep.times.push_back(t);
    rep.deviation.push_back(dev);
    rep.retention.push_back(c0 > 0.0 ? std::abs(r_eig(0, 1)) / c0 : std::numeric_limits<double>::quiet_NaN());
    rep.population_drift.push_back(drift);
    rep.bound.push_back(bound_shape(shape, t));
    rep.sup_deviation = std::max(rep.sup_deviation, dev);
    rep.max_population_drift = std::max(rep.max_population_drift, drift);
  }
  rep.final_retention = rep.retention.back();
  return rep;
}

// ---------------------------------------------------------------------------

std::string csv_header(int dim) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) os << ",re_" << i << j << ",im_" << i << j;
  }
  for (int m = 0; m < dim; ++m) {
    for (int n = m + 1; n < dim; ++n) os << ",coherence_" << m << n;
  }
  os << ",deviation";
  for (int k = 0; k < dim; ++k) os << ",pop_" << k;
  return os.str();
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.reduced.empty()) throw ArgumentError("write_csv: empty trajectory");
  const int dim = static_cast<int>(traj.reduced.front().rows());
  out << csv_header(dim) << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const ComplexMatrix& r = traj.reduced[i];
    const ComplexMatrix r_eig = traj.eigenbasis.adjoint() * r * traj.eigenbasis;
    out << num(traj.times[i]);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) out << "," << num(r(a, b).real()) << "," << num(r(a, b).imag());
    }
    for (int m = 0; m < dim; ++m) {
      for (int n = m + 1; n < dim; ++n) out << "," << num(std::abs(r_eig(m, n)));
    }
    out << "," << num(traj.deviation[i]);
    for (int k = 0; k < dim; ++k) out << "," << num(r_eig(k, k).real());
    out << "\n";
  }
}

}  // namespace decoshield::exactsim
