#include "decoshield/weakcoupling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "decoshield/errors.hpp"

namespace decoshield::weakcoupling {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr core::Complex kI{0.0, 1.0};

double bohr_gap(const control::SystemModel& model) {
  const auto& sp = model.spectrum();
  if (model.dim() != 2 || !sp.simple()) {
    throw UnsupportedModel("the level-shift generator is only derived for a nondegenerate qubit");
  }
  return sp.eigenvalues[1] - sp.eigenvalues[0];
}

// Weight a term carries in A_2, used for the truncation tail.
double term_weight(const Term& t) { return t.q_norm * t.q_norm * (kPi * t.g + std::abs(t.pv)); }

void finish(WeakCouplingGenerator& gen, int dim) {
  const double l2 = gen.lambda * gen.lambda;
  ComplexMatrix a2 = ComplexMatrix::Zero(dim * dim, dim * dim);
  ComplexMatrix s = ComplexMatrix::Zero(dim, dim);
  double tail = 0.0;
  for (const Term& t : gen.terms) {
    if (t.q_norm == 0.0) continue;
    const ComplexMatrix qq = t.q.adjoint() * t.q;
    const ComplexMatrix left_qq = core::left_mult(qq).matrix();
    const ComplexMatrix right_qq = core::right_mult(qq).matrix();
    const ComplexMatrix sandwich = (core::left_mult(t.q.adjoint()) * core::right_mult(t.q)).matrix();
    const ComplexMatrix dissipative = 2.0 * sandwich - left_qq - right_qq;
    const ComplexMatrix hamiltonian = right_qq - left_qq;
    a2 += (-kI * 0.5 * l2) * ((kPi * t.g) * dissipative + (kI * t.pv) * hamiltonian);
    s += (-0.5 * l2 * t.pv) * qq;
    if (std::abs(t.k) > gen.k_used / 2) tail += term_weight(t);
  }
  gen.a2 = SuperOperator(dim, std::move(a2));
  gen.s = 0.5 * (s + s.adjoint());
  gen.delta = core::build_superop(core::SuperKind::commutator, gen.s);
  gen.tail_estimate = l2 * tail;
}

}  // namespace

std::vector<double> WeakCouplingGenerator::dissipator_weights() const {
  std::vector<double> out;
  out.reserve(terms.size());
  for (const Term& t : terms) out.push_back(kPi * t.g);
  return out;
}

WeakCouplingGenerator assemble(const control::SystemModel& model, const LadderProvider& ladder, int cutoff,
                               const reservoir::SpectralFunction& g, double period, double lambda) {
  if (cutoff < 1) throw ArgumentError("level shift: cutoff must be >= 1");
  if (!(period > 0.0)) throw ArgumentError("level shift: period must be positive");
  if (!std::isfinite(lambda)) throw ArgumentError("level shift: lambda must be finite");
  WeakCouplingGenerator gen;
  gen.gap = bohr_gap(model);
  gen.k_used = cutoff;
  gen.lambda = lambda;
  gen.period = period;
  for (int a : {-1, 1}) {
    for (int k = -cutoff; k <= cutoff; ++k) {
      if (k == 0) continue;
      Term t;
      t.k = k;
      t.a = a;
      t.x = k / period + a * gen.gap;
      t.q = ladder(k, a);
      t.q_norm = core::op_norm(t.q);
      if (t.q_norm != 0.0) {
        t.g = g(t.x);
        t.pv = reservoir::pv_integral(g, t.x);
      }
      gen.terms.push_back(std::move(t));
    }
  }
  finish(gen, model.dim());
  return gen;
}

WeakCouplingGenerator level_shift(const control::SystemModel& model, const control::FourierTable& table,
                                  const reservoir::SpectralFunction& g, double lambda) {
  bohr_gap(model);
  if (!table.has_ladder()) throw UnsupportedModel("level shift: Fourier table carries no ladder modes");
  const double zero = core::op_norm(table.mode(0));
  if (zero >= control::kDefaultDDTolerance) {
    std::ostringstream os;
    os << "level shift requires the DD condition; zero mode |Q^(0)| = " << zero;
    throw PreconditionError(os.str());
  }
  auto ladder = [&table](int k, int a) { return table.ladder_mode(k, a); };
  return assemble(model, ladder, table.cutoff, g, table.period, lambda);
}

WeakCouplingGenerator level_shift(const control::SystemModel& model, const control::ControlSchedule& schedule,
                                  const reservoir::SpectralFunction& g, double lambda, double tail_tol) {
  bohr_gap(model);
  const auto dd = control::check_dd(model, schedule);
  if (!dd.verdict) {
    std::ostringstream os;
    os << "level shift requires the DD condition; zero mode |Q^(0)| = " << dd.zero_mode_norm
       << ", periodicity defect " << dd.periodicity_defect;
    throw PreconditionError(os.str());
  }
  WeakCouplingGenerator gen;
  if (schedule.kind() == control::ScheduleKind::bangbang) {
    auto ladder = [&](int k, int a) { return control::qka_bangbang_closed_form(model, schedule, k, a); };
    // The closed form decays like 1/k, so the cutoff may have to grow far.
    constexpr int kMaxCutoff = 1 << 17;
    for (int cutoff = 64;; cutoff *= 2) {
      gen = assemble(model, ladder, cutoff, g, schedule.period(), lambda);
      gen.truncation_converged = gen.tail_estimate < tail_tol;
      if (gen.truncation_converged || cutoff >= kMaxCutoff) break;
    }
  } else {
    const auto table = control::fourier_modes_auto(model, schedule, tail_tol);
    gen = level_shift(model, table, g, lambda);
    gen.truncation_converged = gen.tail_estimate < tail_tol && table.tail_bound < tail_tol;
  }
  gen.d_parameter = schedule.d_parameter();
  return gen;
}

WeakCouplingGenerator with_lambda(const WeakCouplingGenerator& gen, double lambda) {
  if (!std::isfinite(lambda)) throw ArgumentError("level shift: lambda must be finite");
  WeakCouplingGenerator out = gen;
  out.lambda = lambda;
  finish(out, static_cast<int>(gen.s.rows()));
  return out;
}

SuperOperator delta_correction(const WeakCouplingGenerator& gen) {
  // Rebuilt from the displayed sum rather than copied from `gen.delta`.
  const int dim = static_cast<int>(gen.s.rows());
  ComplexMatrix m = ComplexMatrix::Zero(dim * dim, dim * dim);
  for (const Term& t : gen.terms) {
    if (t.q_norm == 0.0) continue;
    const ComplexMatrix qq = t.q.adjoint() * t.q;
    m += (0.5 * gen.lambda * gen.lambda * t.pv) * (core::right_mult(qq).matrix() - core::left_mult(qq).matrix());
  }
  return SuperOperator(dim, std::move(m));
}

double xi_rate(const WeakCouplingGenerator& gen, bool first_power) {
  double xi = 0.0;
  for (const Term& t : gen.terms) {
    const double gx = first_power ? std::abs(t.g) : t.g * t.g;
    xi += t.q_norm * t.q_norm * gx;
  }
  return xi;
}

RateSummary decoherence_time(const WeakCouplingGenerator& gen, double c_const, bool first_power) {
  if (!std::isfinite(c_const)) throw ArgumentError("decoherence_time: c_const must be finite");
  RateSummary r;
  r.xi = xi_rate(gen, first_power);
  r.c_const = c_const;
  r.d_parameter = gen.d_parameter;
  r.lambda = gen.lambda;
  r.period = gen.period;
  const double l = std::abs(gen.lambda);
  const double l2 = l * l;
  if (l == 0.0) {
    r.t_dec = std::numeric_limits<double>::infinity();
    r.theorem_horizon = std::numeric_limits<double>::infinity();
    r.improvement_ratio = 0.0;
    r.improves_on_general = true;
    r.small_period_ratio = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.t_dec = 1.0 / (2.0 * kPi * l2 * (r.xi + c_const * l2));
  r.theorem_horizon = c_const != 0.0 ? 1.0 / (c_const * l * gen.period) : std::numeric_limits<double>::infinity();
  r.improvement_ratio = (l2 * r.xi + l2 * l2) / (l * gen.period);
  r.improves_on_general = r.improvement_ratio < kImprovementThreshold;
  r.small_period_ratio = c_const != 0.0 ? r.t_dec * (2.0 * kPi * c_const * l2 * l2) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

namespace {

ComplexMatrix phase_evolve(const WeakCouplingGenerator& gen, const control::SystemModel& model,
                           const ComplexMatrix& rho, double t) {
  const auto& sp = model.spectrum();
  const ComplexMatrix& v = sp.eigenvectors;
  if (gen.s.rows() != model.dim()) throw ArgumentError("corrected_propagate: generator does not match the model");
  const ComplexMatrix s_eig = v.adjoint() * gen.s * v;
  // S commutes with H_s; for a simple spectrum it is diagonal in this basis.
  ComplexMatrix u;
  if (sp.simple()) {
    core::ComplexVector phases(model.dim());
    for (int m = 0; m < model.dim(); ++m) {
      phases[m] = std::exp(-kI * t * (sp.all_eigenvalues[m] + s_eig(m, m).real()));
    }
    const ComplexMatrix rho_eig = v.adjoint() * rho * v;
    ComplexMatrix out = phases.asDiagonal() * rho_eig * phases.conjugate().asDiagonal();
    return v * out * v.adjoint();
  }
  u = core::unitary_exp(model.hs() + gen.s, t);
  return u * rho * u.adjoint();
}

}  // namespace

ComplexMatrix corrected_propagate(const WeakCouplingGenerator& gen, const control::SystemModel& model,
                                  const ComplexMatrix& rho0, double t) {
  core::require_density_matrix(rho0);
  return phase_evolve(gen, model, rho0, t);
}

ComplexMatrix corrected_propagate(const WeakCouplingGenerator& gen, const control::SystemModel& model,
                                  const control::ControlSchedule& schedule, const ComplexMatrix& rho0, double t) {
  core::require_density_matrix(rho0);
  const ComplexMatrix vc = control::vc_at(schedule, t);
  return phase_evolve(gen, model, vc.adjoint() * rho0 * vc, t);
}

std::vector<double> level_shifts(const WeakCouplingGenerator& gen, const control::SystemModel& model) {
  const ComplexMatrix& v = model.spectrum().eigenvectors;
  const ComplexMatrix s_eig = v.adjoint() * gen.s * v;
  std::vector<double> out;
  for (int m = 0; m < model.dim(); ++m) out.push_back(s_eig(m, m).real());
  return out;
}

}  // namespace decoshield::weakcoupling
