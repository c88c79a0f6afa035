#pragma once

// Second-order weak-coupling theory for a driven qubit: the level-shift
// generator lambda^2 A_2, its Hamiltonian part Delta = [S, .], the filtered
// decoherence rate xi(T) and the derived decoherence time.

#include <functional>
#include <limits>
#include <vector>

#include "decoshield/control.hpp"
#include "decoshield/operator_core.hpp"
#include "decoshield/reservoir.hpp"

namespace decoshield::weakcoupling {

using core::ComplexMatrix;
using core::SuperOperator;

// (k, a) -> Q_{k,a}.
using LadderProvider = std::function<ComplexMatrix(int, int)>;

struct Term {
  int k = 0;
  int a = 0;
  double x = 0.0;       // k/T + a * (Bohr gap)
  double g = 0.0;       // G_f(x)
  double pv = 0.0;      // principal value of G_f / (p - x)
  double q_norm = 0.0;  // |Q_{k,a}|
  ComplexMatrix q;
};

struct WeakCouplingGenerator {
  SuperOperator a2;      // lambda^2 A_2, already multiplied by lambda^2
  SuperOperator delta;   // [S, .]
  ComplexMatrix s;       // Hermitian, commutes with H_s
  std::vector<Term> terms;  // ordered by (a, k), k = 0 never present
  int k_used = 0;
  double tail_estimate = 0.0;  // weight carried by K/2 < |k| <= K
  bool truncation_converged = false;
  double lambda = 0.0;
  double period = 0.0;
  double gap = 0.0;  // E_top - E_bottom
  double d_parameter = std::numeric_limits<double>::quiet_NaN();  // T max |H_c|, when known

  // pi G_f(x) for every retained (k, a), in term order.
  std::vector<double> dissipator_weights() const;
};

inline constexpr double kDefaultTailTolerance = 1e-12;

// Assembles lambda^2 A_2 from the first `cutoff` ladder modes on each side.
// Requires a nondegenerate qubit; the caller vouches for the DD condition.
WeakCouplingGenerator assemble(const control::SystemModel& model, const LadderProvider& ladder, int cutoff,
                               const reservoir::SpectralFunction& g, double period, double lambda);

// From a precomputed Fourier table. Throws PreconditionError when the table's
// zero mode does not vanish and UnsupportedModel unless d = 2.
WeakCouplingGenerator level_shift(const control::SystemModel& model, const control::FourierTable& table,
                                  const reservoir::SpectralFunction& g, double lambda);

// Verifies DD, then grows the k cutoff until the truncated weight falls below
// tail_tol (bang-bang schedules use the closed-form coefficients).
WeakCouplingGenerator level_shift(const control::SystemModel& model, const control::ControlSchedule& schedule,
                                  const reservoir::SpectralFunction& g, double lambda,
                                  double tail_tol = kDefaultTailTolerance);

// The same terms at a different coupling strength.
WeakCouplingGenerator with_lambda(const WeakCouplingGenerator& gen, double lambda);

// Delta = (lambda^2 / 2) sum (<-Q <-Q* - ->Q* ->Q) PV_{k,a}.
SuperOperator delta_correction(const WeakCouplingGenerator& gen);

// xi(T) = sum |Q_{k,a}|^2 |G_f(x)|^2, or with G_f to the first power.
double xi_rate(const WeakCouplingGenerator& gen, bool first_power = false);

struct RateSummary {
  double xi = 0.0;
  double t_dec = 0.0;
  double c_const = 1.0;
  double d_parameter = 0.0;
  double theorem_horizon = 0.0;  // 1 / (c |lambda| T)
  double lambda = 0.0;
  double period = 0.0;
  // (lambda^2 xi + lambda^4) / (|lambda| T); the leading-order time beats the
  // general horizon when this is small.
  double improvement_ratio = 0.0;
  bool improves_on_general = false;
  // Ratio of t_dec to the lambda^-4 behaviour reached as xi -> 0.
  double small_period_ratio = 0.0;
};

inline constexpr double kImprovementThreshold = 0.1;

// t_dec = 1 / (2 pi lambda^2 (xi + c lambda^2)); infinite for lambda = 0.
RateSummary decoherence_time(const WeakCouplingGenerator& gen, double c_const, bool first_power = false);

// Reference dynamics exp(-it(H_s + S)) V_c(t)* rho0 V_c(t) exp(it(H_s + S)),
// applied as exact phases in the eigenbasis of H_s.
ComplexMatrix corrected_propagate(const WeakCouplingGenerator& gen, const control::SystemModel& model,
                                  const ComplexMatrix& rho0, double t);
ComplexMatrix corrected_propagate(const WeakCouplingGenerator& gen, const control::SystemModel& model,
                                  const control::ControlSchedule& schedule, const ComplexMatrix& rho0, double t);

// Frequency shifts <phi_k, S phi_k> in the eigenbasis of H_s.
std::vector<double> level_shifts(const WeakCouplingGenerator& gen, const control::SystemModel& model);

}  // namespace decoshield::weakcoupling
