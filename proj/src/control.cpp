#include "decoshield/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "decoshield/errors.hpp"
#include "decoshield/quadrature.hpp"

namespace decoshield::control {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
constexpr int kTrapezoidPoints = 4096;

double frac_part(double s) { return s - std::floor(s); }

}  // namespace

// ---------------------------------------------------------------------------

SystemModel::SystemModel(ComplexMatrix hs, ComplexMatrix q) : hs_(std::move(hs)), q_(std::move(q)) {
  if (hs_.rows() != hs_.cols() || hs_.rows() == 0) throw ArgumentError("SystemModel: H_s must be square");
  if (q_.rows() != hs_.rows() || q_.cols() != hs_.cols()) throw ArgumentError("SystemModel: Q must match H_s");
  if (!core::all_finite(hs_) || !core::all_finite(q_)) throw ArgumentError("SystemModel: non-finite entries");
  if (core::hermiticity_defect(q_) > 1e-12) throw ArgumentError("SystemModel: Q must be Hermitian");
  spectrum_ = core::spectral_decomposition(hs_);
  hs_norm_ = core::op_norm(hs_);
}

SystemModel SystemModel::spin_fermion() { return {core::sigma_z(), core::sigma_x()}; }

// ---------------------------------------------------------------------------

Profile Profile::fourier(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
  Profile p;
  std::ostringstream os;
  os << "fourier(c0=" << c0 << ", " << cos_coeffs.size() << " cos, " << sin_coeffs.size() << " sin)";
  p.name = os.str();
  p.value = [c0, a = cos_coeffs, b = sin_coeffs](double s) {
    double v = c0;
    for (std::size_t m = 0; m < a.size(); ++m) v += a[m] * std::cos(kTwoPi * (m + 1) * s);
    for (std::size_t m = 0; m < b.size(); ++m) v += b[m] * std::sin(kTwoPi * (m + 1) * s);
    return v;
  };
  p.antiderivative = [c0, a = std::move(cos_coeffs), b = std::move(sin_coeffs)](double s) {
    double v = c0 * s;
    for (std::size_t m = 0; m < a.size(); ++m) {
      const double w = kTwoPi * (m + 1);
      v += a[m] * std::sin(w * s) / w;
    }
    for (std::size_t m = 0; m < b.size(); ++m) {
      const double w = kTwoPi * (m + 1);
      v += b[m] * (1.0 - std::cos(w * s)) / w;
    }
    return v;
  };
  return p;
}

Profile Profile::cosine() {
  Profile p = fourier(0.0, {1.0}, {});
  p.name = "cos";
  return p;
}

Profile Profile::from_function(std::string name, std::function<double(double)> kappa) {
  Profile p;
  p.name = std::move(name);
  p.value = kappa;
  const double full = quad::integrate(kappa, 0.0, 1.0, 1e-15, 1e-14).value;
  p.antiderivative = [kappa = std::move(kappa), full](double s) {
    const double n = std::floor(s);
    const double r = s - n;
    return n * full + quad::integrate(kappa, 0.0, r, 1e-15, 1e-14).value;
  };
  return p;
}

// ---------------------------------------------------------------------------

void ControlSchedule::init_direction(ComplexMatrix direction) {
  if (direction.rows() != direction.cols() || direction.rows() == 0) {
    throw ArgumentError("ControlSchedule: direction must be square");
  }
  if (core::hermiticity_defect(direction) > 1e-12) throw ArgumentError("ControlSchedule: direction must be Hermitian");
  direction_ = std::move(direction);
  direction_spectrum_ = core::spectral_decomposition(direction_);
}

ControlSchedule ControlSchedule::none(double period, int dim) {
  ControlSchedule s = smooth(period, 0.0, Profile::cosine(), ComplexMatrix::Zero(dim, dim));
  s.zero_ = true;
  return s;
}

ControlSchedule ControlSchedule::smooth(double period, double amplitude, Profile profile, ComplexMatrix direction) {
  if (!(period > 0.0) || !std::isfinite(period)) throw ArgumentError("ControlSchedule: period must be positive");
  if (!std::isfinite(amplitude)) throw ArgumentError("ControlSchedule: amplitude must be finite");
  if (!profile.value || !profile.antiderivative) throw ArgumentError("ControlSchedule: profile is empty");
  if (std::abs(profile.value(0.0) - profile.value(1.0)) > 1e-12) {
    throw ArgumentError("ControlSchedule: profile is not 1-periodic (kappa(0) != kappa(1))");
  }
  ControlSchedule s;
  s.kind_ = ScheduleKind::smooth;
  s.period_ = period;
  s.amplitude_ = amplitude;
  s.profile_ = std::move(profile);
  s.init_direction(std::move(direction));
  s.zero_ = amplitude == 0.0 || s.direction_.cwiseAbs().maxCoeff() == 0.0;
  return s;
}

ControlSchedule ControlSchedule::bangbang(double period, std::vector<Kick> kicks, ComplexMatrix direction) {
  if (!(period > 0.0) || !std::isfinite(period)) throw ArgumentError("ControlSchedule: period must be positive");
  if (kicks.empty()) throw ArgumentError("ControlSchedule: bang-bang schedule needs at least one kick");
  double total = 0.0, scale = 0.0;
  for (std::size_t l = 0; l < kicks.size(); ++l) {
    if (!(kicks[l].phase > 0.0 && kicks[l].phase < 1.0)) {
      throw ArgumentError("ControlSchedule: kick phases must lie in (0, 1)");
    }
    if (l > 0 && !(kicks[l].phase > kicks[l - 1].phase)) {
      throw ArgumentError("ControlSchedule: kick phases must be strictly increasing");
    }
    total += kicks[l].weight;
    scale = std::max(scale, std::abs(kicks[l].weight));
  }
  if (std::abs(total) > 1e-12 * std::max(1.0, scale)) {
    throw ArgumentError("ControlSchedule: kick weights must sum to zero");
  }
  ControlSchedule s;
  s.kind_ = ScheduleKind::bangbang;
  s.period_ = period;
  s.amplitude_ = 1.0;
  s.kicks_ = std::move(kicks);
  s.init_direction(std::move(direction));
  return s;
}

ControlSchedule ControlSchedule::sinusoidal(double period, double amplitude) {
  return smooth(period, amplitude, Profile::cosine(), core::sigma_z());
}

double ControlSchedule::phase(double t) const {
  if (zero_) return 0.0;
  if (kind_ == ScheduleKind::smooth) return amplitude_ * profile_.antiderivative(t / period_);
  // Weights sum to zero, so only the partial period contributes.
  const double s = frac_part(t / period_);
  double phi = 0.0;
  for (const Kick& k : kicks_) {
    if (k.phase < s) phi += k.weight;
  }
  return phi;
}

ComplexMatrix ControlSchedule::rotation(double phi) const {
  const auto& sp = direction_spectrum_;
  ComplexMatrix out = ComplexMatrix::Zero(dim(), dim());
  for (std::size_t m = 0; m < sp.eigenvalues.size(); ++m) {
    out += std::exp(kI * phi * sp.eigenvalues[m]) * sp.projectors[m];
  }
  return out;
}

ComplexMatrix ControlSchedule::hc(double t) const {
  if (zero_ || kind_ == ScheduleKind::bangbang) return ComplexMatrix::Zero(dim(), dim());
  return (amplitude_ / period_) * profile_.value(t / period_) * direction_;
}

std::vector<double> ControlSchedule::kick_times(double t0, double t1) const {
  std::vector<double> out;
  if (kind_ != ScheduleKind::bangbang || !(t1 > t0)) return out;
  const long first = static_cast<long>(std::floor(t0 / period_)) - 1;
  const long last = static_cast<long>(std::ceil(t1 / period_)) + 1;
  for (long j = first; j <= last; ++j) {
    for (const Kick& k : kicks_) {
      const double tk = (static_cast<double>(j) + k.phase) * period_;
      if (tk > t0 && tk < t1) out.push_back(tk);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double ControlSchedule::max_norm() const {
  if (zero_) return 0.0;
  if (kind_ == ScheduleKind::bangbang) return std::numeric_limits<double>::infinity();
  double peak = 0.0;
  for (int m = 0; m < kTrapezoidPoints; ++m) {
    peak = std::max(peak, std::abs(profile_.value(static_cast<double>(m) / kTrapezoidPoints)));
  }
  return std::abs(amplitude_) / period_ * peak * core::op_norm(direction_);
}

ControlSchedule ControlSchedule::rescaled(double new_period) const {
  ControlSchedule s = *this;
  if (!(new_period > 0.0)) throw ArgumentError("ControlSchedule::rescaled: period must be positive");
  s.period_ = new_period;
  return s;
}

// ---------------------------------------------------------------------------

void require_commuting(const SystemModel& model, const ControlSchedule& schedule) {
  if (schedule.dim() != model.dim()) throw ArgumentError("control direction dimension does not match H_s");
  const double scale = std::max(1.0, model.hs_norm());
  // Both schedule kinds act along H_dir; bang-bang kicks are checked through H_dir itself.
  if (schedule.kind() == ScheduleKind::bangbang) {
    if (core::op_norm(core::commutator(model.hs(), schedule.direction())) > 1e-12 * scale) {
      throw ArgumentError("control direction does not commute with H_s");
    }
    return;
  }
  for (int m = 0; m < 64; ++m) {
    const double t = schedule.period() * m / 64.0;
    if (core::op_norm(core::commutator(model.hs(), schedule.hc(t))) > 1e-12 * scale) {
      throw ArgumentError("H_c(t) does not commute with H_s");
    }
  }
}

ComplexMatrix vc_at(const ControlSchedule& schedule, double t) {
  if (t < 0.0) throw ArgumentError("vc_at: negative time");
  return schedule.rotation(schedule.phase(t));
}

ComplexMatrix q_of_t(const SystemModel& model, const ControlSchedule& schedule, double t) {
  const ComplexMatrix v = vc_at(schedule, t);
  return v.adjoint() * model.q() * v;
}

namespace {

// Breakpoints for integrating Q over [t0, t1]: kick times plus an even split.
std::vector<double> breakpoints(const ControlSchedule& schedule, double t0, double t1, int panels) {
  std::vector<double> pts;
  for (int i = 0; i <= panels; ++i) pts.push_back(t0 + (t1 - t0) * i / panels);
  for (double tk : schedule.kick_times(t0, t1)) pts.push_back(tk);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

ComplexMatrix integrate_q(const SystemModel& model, const ControlSchedule& schedule, double t0, double t1) {
  const auto pts = breakpoints(schedule, t0, t1, 8);
  auto f = [&](double s) -> ComplexMatrix { return q_of_t(model, schedule, s); };
  const double scale = std::max(1.0, core::op_norm(model.q())) * (t1 - t0);
  auto res = quad::integrate(f, std::span<const double>(pts), 1e-15 * scale, 0.0, 4000);
  if (!res.converged && res.error > 1e-12 * scale) {
    std::ostringstream os;
    os << "integrate_q: quadrature did not converge on [" << t0 << ", " << t1 << "], error " << res.error;
    throw NumericError(os.str());
  }
  return res.value;
}

}  // namespace

ComplexMatrix zero_mode(const SystemModel& model, const ControlSchedule& schedule) {
  return integrate_q(model, schedule, 0.0, schedule.period()) / schedule.period();
}

DDReport check_dd(const SystemModel& model, const ControlSchedule& schedule, double tol) {
  if (!(tol > 0.0)) throw ArgumentError("check_dd: tolerance must be positive");
  require_commuting(model, schedule);
  const double period = schedule.period();
  DDReport rep;
  rep.tolerance = tol;
  for (int b = 0; b < 16; ++b) {
    const double t = period * b / 16.0;
    const ComplexMatrix window = integrate_q(model, schedule, t, t + period);
    const double norm = core::op_norm(window);
    rep.residual = std::max(rep.residual, norm);
    if (b == 0) rep.zero_mode_norm = norm / period;
  }
  rep.periodicity_defect = core::op_norm(q_of_t(model, schedule, period) - model.q());
  rep.verdict = rep.periodicity_defect < tol && rep.zero_mode_norm < tol;
  rep.residual_verdict = rep.residual <= tol * period;
  return rep;
}

double zero_mode_surrogate(const SystemModel& model, const ControlSchedule& schedule) {
  const double qq = core::hs_inner(model.q(), model.q()).real();
  if (qq == 0.0) return 0.0;
  return core::hs_inner(model.q(), zero_mode(model, schedule)).real() / qq;
}

TuneResult tune_amplitude(const SystemModel& model, const ScheduleFamily& family, double lo, double hi, double tol) {
  if (!(hi > lo)) throw ArgumentError("tune_amplitude: bracket must satisfy lo < hi");
  TuneResult res;
  auto surrogate = [&](double mu) {
    ++res.evaluations;
    return zero_mode_surrogate(model, family(mu));
  };
  auto zero_norm = [&](double mu) { return core::op_norm(zero_mode(model, family(mu))); };

  constexpr int kScan = 64;
  std::vector<double> mus(kScan + 1), vals(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    mus[i] = lo + (hi - lo) * i / kScan;
    vals[i] = surrogate(mus[i]);
  }
  auto accept = [&](double mu) {
    const double zn = zero_norm(mu);
    if (zn < tol) {
      res.mu = mu;
      res.surrogate = surrogate(mu);
      res.zero_mode_norm = zn;
      return true;
    }
    return false;
  };
  for (int i = 0; i < kScan; ++i) {
    if (vals[i] == 0.0 && accept(mus[i])) return res;
    if (vals[i] * vals[i + 1] < 0.0) {
      boost::uintmax_t max_iter = 200;
      auto tolerance = boost::math::tools::eps_tolerance<double>(52);
      auto [a, b] = boost::math::tools::toms748_solve(surrogate, mus[i], mus[i + 1], vals[i], vals[i + 1],
                                                      tolerance, max_iter);
      const double root = std::abs(surrogate(a)) <= std::abs(surrogate(b)) ? a : b;
      if (accept(root)) return res;
    }
  }
  // No usable sign change: try an interior minimum of |Q^(0)|.
  int best = 0;
  std::vector<double> norms(kScan + 1);
  for (int i = 0; i <= kScan; ++i) {
    norms[i] = zero_norm(mus[i]);
    if (norms[i] < norms[best]) best = i;
  }
  if (best > 0 && best < kScan) {
    double a = mus[best - 1], b = mus[best + 1];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      if (zero_norm(c) < zero_norm(d)) {
        b = d;
      } else {
        a = c;
      }
    }
    if (accept(0.5 * (a + b))) return res;
  }
  std::ostringstream trace;
  trace << "mu,surrogate,zero_mode_norm\n";
  for (int i = 0; i <= kScan; ++i) trace << mus[i] << "," << vals[i] << "," << norms[i] << "\n";
  std::ostringstream os;
  os << "tune_amplitude: no zero of the DD zero mode in [" << lo << ", " << hi << "]";
  throw SearchFailure(os.str(), trace.str());
}

// ---------------------------------------------------------------------------

std::pair<ComplexMatrix, ComplexMatrix> ladder_operators(const SystemModel& model) {
  const auto& sp = model.spectrum();
  if (model.dim() != 2 || !sp.simple()) {
    throw UnsupportedModel("ladder operators require a nondegenerate two-level system");
  }
  const ComplexMatrix& bottom = sp.projectors[0];
  const ComplexMatrix& top = sp.projectors[1];
  return {top * model.q() * bottom, bottom * model.q() * top};
}

namespace {

// Fourier coefficients (1/T) int_0^T e^{-2 pi i k t/T} X(t) dt, k in [-K, K],
// for X(t) = V_c(t)* X0 V_c(t).
std::map<int, ComplexMatrix> transform(const ControlSchedule& schedule, const ComplexMatrix& x0, int cutoff) {
  const double period = schedule.period();
  std::map<int, ComplexMatrix> out;
  const int d = static_cast<int>(x0.rows());
  for (int k = -cutoff; k <= cutoff; ++k) out[k] = ComplexMatrix::Zero(d, d);

  auto conj_at_phase = [&](double phi) {
    const ComplexMatrix v = schedule.rotation(phi);
    return ComplexMatrix(v.adjoint() * x0 * v);
  };

  if (schedule.kind() == ScheduleKind::bangbang) {
    // Piecewise constant: integrate the exponential exactly on each piece.
    std::vector<double> edges{0.0};
    for (const Kick& kk : schedule.kicks()) edges.push_back(kk.phase);
    edges.push_back(1.0);
    double phi = 0.0;
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
      if (j > 0) phi += schedule.kicks()[j - 1].weight;
      const ComplexMatrix piece = conj_at_phase(phi);
      const double s0 = edges[j], s1 = edges[j + 1];
      for (int k = -cutoff; k <= cutoff; ++k) {
        Complex w;
        if (k == 0) {
          w = s1 - s0;
        } else {
          const double om = kTwoPi * k;
          w = (std::exp(-kI * om * s1) - std::exp(-kI * om * s0)) / (-kI * om);
        }
        out[k] += w * piece;
      }
    }
    return out;
  }

  // Smooth: trapezoid on a uniform grid, spectrally accurate for periodic X(t).
  const int m = kTrapezoidPoints;
  std::vector<ComplexMatrix> samples(m + 1);
  for (int j = 0; j <= m; ++j) samples[j] = conj_at_phase(schedule.phase(period * j / m));
  for (int k = -cutoff; k <= cutoff; ++k) {
    ComplexMatrix acc = ComplexMatrix::Zero(d, d);
    for (int j = 0; j <= m; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 : 1.0;
      // e^{-2 pi i k j/m}, reduced modulo m to keep the argument small.
      const long r = (static_cast<long>(k) * j) % m;
      acc += (w * std::exp(-kI * (kTwoPi * static_cast<double>(r) / m))) * samples[j];
    }
    out[k] = acc / static_cast<double>(m);
  }
  return out;
}

double time_norm(const ControlSchedule& schedule, const ComplexMatrix& x0) {
  // |V* X V|_HS is constant in time; integrate anyway so the Parseval check
  // compares against the time domain rather than an identity.
  const int m = kTrapezoidPoints;
  double acc = 0.0;
  for (int j = 0; j <= m; ++j) {
    const double w = (j == 0 || j == m) ? 0.5 : 1.0;
    const ComplexMatrix v = schedule.rotation(schedule.phase(schedule.period() * j / m));
    acc += w * (v.adjoint() * x0 * v).squaredNorm();
  }
  return acc / m;
}

}  // namespace

FourierTable fourier_modes(const SystemModel& model, const ControlSchedule& schedule, int cutoff) {
  if (cutoff <= 0) throw ArgumentError("fourier_modes: cutoff must be >= 1");
  if (cutoff > kTrapezoidPoints / 2 - 1) throw ArgumentError("fourier_modes: cutoff exceeds the quadrature grid");
  require_commuting(model, schedule);
  FourierTable table;
  table.cutoff = cutoff;
  table.period = schedule.period();
  table.modes = transform(schedule, model.q(), cutoff);
  table.time_norm = time_norm(schedule, model.q());
  double partial = 0.0, tail = 0.0;
  for (const auto& [k, mk] : table.modes) {
    const double w = mk.squaredNorm();
    partial += w;
    if (std::abs(k) > cutoff / 2) tail += w;
  }
  table.parseval_defect = std::abs(partial - table.time_norm);
  table.tail_bound = tail;
  if (model.dim() == 2 && model.spectrum().simple()) {
    const auto [qm, qp] = ladder_operators(model);
    for (const auto& [k, mk] : transform(schedule, qm, cutoff)) table.ladder[{k, -1}] = mk;
    for (const auto& [k, mk] : transform(schedule, qp, cutoff)) table.ladder[{k, +1}] = mk;
  }
  return table;
}

FourierTable fourier_modes_auto(const SystemModel& model, const ControlSchedule& schedule, double tail_tol,
                                int max_cutoff) {
  int cutoff = 8;
  FourierTable table = fourier_modes(model, schedule, cutoff);
  while (table.tail_bound >= tail_tol && cutoff < max_cutoff) {
    cutoff = std::min(2 * cutoff, max_cutoff);
    table = fourier_modes(model, schedule, cutoff);
  }
  return table;
}

ComplexMatrix qka_bangbang_closed_form(const SystemModel& model, const ControlSchedule& schedule, int k, int a) {
  if (schedule.kind() != ScheduleKind::bangbang) {
    throw PreconditionError("qka_bangbang_closed_form: schedule is not bang-bang");
  }
  if (a != 1 && a != -1) throw ArgumentError("qka_bangbang_closed_form: a must be +1 or -1");
  const auto [qm, qp] = ladder_operators(model);
  const ComplexMatrix& qa = a == -1 ? qm : qp;
  auto conj_at = [&](double phi) {
    const ComplexMatrix v = schedule.rotation(phi);
    return ComplexMatrix(v.adjoint() * qa * v);
  };
  if (k == 0) {
    if (!check_dd(model, schedule).verdict) {
      throw PreconditionError("qka_bangbang_closed_form: k = 0 needs the DD condition, which is violated");
    }
    return ComplexMatrix::Zero(2, 2);
  }
  double total = 0.0;
  for (const Kick& kk : schedule.kicks()) total += kk.weight;
  if ((conj_at(total) - qa).cwiseAbs().maxCoeff() > 1e-12) {
    throw PreconditionError("qka_bangbang_closed_form: Q_a(t) is not periodic");
  }
  ComplexMatrix acc = ComplexMatrix::Zero(2, 2);
  double phi = 0.0;
  for (const Kick& kk : schedule.kicks()) {
    const ComplexMatrix jump = conj_at(phi + kk.weight) - conj_at(phi);
    acc += std::exp(-kI * (kTwoPi * kk.phase * k)) * jump;
    phi += kk.weight;
  }
  return (-kI / (kTwoPi * k)) * acc;
}

ComplexMatrix effective_dynamics(const SystemModel& model, const ControlSchedule& schedule, const ComplexMatrix& rho0,
                                 double t) {
  core::require_density_matrix(rho0);
  if (rho0.rows() != model.dim()) throw ArgumentError("effective_dynamics: state dimension mismatch");
  const ComplexMatrix free = core::unitary_exp(model.hs(), t);
  const ComplexMatrix v = vc_at(schedule, t);
  return free * v.adjoint() * rho0 * v * free.adjoint();
}

std::vector<double> control_phases(const SystemModel& model, const ControlSchedule& schedule, double t) {
  const double phi = schedule.phase(t);
  const auto& vecs = model.spectrum().eigenvectors;
  std::vector<double> out;
  for (int k = 0; k < vecs.cols(); ++k) {
    out.push_back(phi * (vecs.col(k).adjoint() * schedule.direction() * vecs.col(k))(0, 0).real());
  }
  return out;
}

}  // namespace decoshield::control
