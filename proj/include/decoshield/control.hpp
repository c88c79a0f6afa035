#pragma once

// Periodic control schedules commuting with the system Hamiltonian, the
// control propagator V_c(t), the interaction-picture coupling
// Q(t) = V_c(t)* Q V_c(t), the dynamical decoupling (DD) check and tuner, and
// Fourier-mode tables of Q(t).

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "decoshield/operator_core.hpp"

namespace decoshield::control {

using core::Complex;
using core::ComplexMatrix;

// Small system: Hamiltonian H_s and the coupling operator Q, both Hermitian.
class SystemModel {
 public:
  SystemModel(ComplexMatrix hs, ComplexMatrix q);

  // The qubit with H_s = diag(1, -1) and Q = sigma_x.
  static SystemModel spin_fermion();

  int dim() const { return static_cast<int>(hs_.rows()); }
  const ComplexMatrix& hs() const { return hs_; }
  const ComplexMatrix& q() const { return q_; }
  const core::SpectralDecomposition& spectrum() const { return spectrum_; }
  double hs_norm() const { return hs_norm_; }

 private:
  ComplexMatrix hs_;
  ComplexMatrix q_;
  core::SpectralDecomposition spectrum_;
  double hs_norm_ = 0.0;
};

// A 1-periodic real profile kappa together with its antiderivative
// K(s) = int_0^s kappa.
struct Profile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> antiderivative;

  // kappa(s) = c0 + sum_m a_m cos(2 pi m s) + b_m sin(2 pi m s), m = 1, 2, ...
  static Profile fourier(double c0, std::vector<double> cos_coeffs, std::vector<double> sin_coeffs);
  // kappa(s) = cos(2 pi s).
  static Profile cosine();
  // Arbitrary periodic profile; the antiderivative is computed by quadrature.
  static Profile from_function(std::string name, std::function<double(double)> kappa);
};

struct Kick {
  double phase;   // alpha_l in (0, 1)
  double weight;  // c_l
};

enum class ScheduleKind { smooth, bangbang };

// T-periodic control H_c(t) = (mu/T) kappa(t/T) H_dir (smooth), or a train of
// instantaneous kicks exp(i c_l H_dir) at times (j + alpha_l) T (bang-bang).
// In both cases V_c(t) = exp(i phi(t) H_dir) with phi the accumulated phase.
class ControlSchedule {
 public:
  static ControlSchedule none(double period, int dim);
  static ControlSchedule smooth(double period, double amplitude, Profile profile, ComplexMatrix direction);
  static ControlSchedule bangbang(double period, std::vector<Kick> kicks, ComplexMatrix direction);
  // The cosine profile along sigma_z.
  static ControlSchedule sinusoidal(double period, double amplitude);

  ScheduleKind kind() const { return kind_; }
  double period() const { return period_; }
  double amplitude() const { return amplitude_; }
  const Profile& profile() const { return profile_; }
  const std::vector<Kick>& kicks() const { return kicks_; }
  const ComplexMatrix& direction() const { return direction_; }
  int dim() const { return static_cast<int>(direction_.rows()); }
  bool is_zero() const { return zero_; }

  // phi(t); kicks at exactly t are not yet applied (left-continuous).
  double phase(double t) const;
  // exp(i phi H_dir), exact through the eigenbasis of H_dir.
  ComplexMatrix rotation(double phi) const;
  // Smooth part of H_c(t); zero between kicks for bang-bang schedules.
  ComplexMatrix hc(double t) const;
  // Kick times in the open interval (t0, t1).
  std::vector<double> kick_times(double t0, double t1) const;

  double max_norm() const;  // max_t |H_c(t)|, infinite for bang-bang
  double d_parameter() const { return period_ * max_norm(); }

  // Same profile (and mu) with a new period: H_c'(t) = (T/T') H_c(t T/T').
  ControlSchedule rescaled(double new_period) const;

 private:
  ControlSchedule() = default;
  void init_direction(ComplexMatrix direction);

  ScheduleKind kind_ = ScheduleKind::smooth;
  double period_ = 1.0;
  double amplitude_ = 0.0;
  Profile profile_;
  std::vector<Kick> kicks_;
  ComplexMatrix direction_;
  core::SpectralDecomposition direction_spectrum_;
  bool zero_ = false;
};

// Throws ArgumentError if |[H_s, H_c(t)]| > 1e-12 at 64 sample times.
void require_commuting(const SystemModel& model, const ControlSchedule& schedule);

ComplexMatrix vc_at(const ControlSchedule& schedule, double t);
ComplexMatrix q_of_t(const SystemModel& model, const ControlSchedule& schedule, double t);

// (1/T) int_0^T Q(t) dt by adaptive quadrature.
ComplexMatrix zero_mode(const SystemModel& model, const ControlSchedule& schedule);

inline constexpr double kDefaultDDTolerance = 1e-7;

struct DDReport {
  double residual = 0.0;             // max_t |int_t^{t+T} Q(s) ds| over 16 base points
  double periodicity_defect = 0.0;   // |Q(T) - Q|
  double zero_mode_norm = 0.0;       // |Q^(0)|
  double tolerance = kDefaultDDTolerance;
  bool verdict = false;              // periodicity and zero-mode both below tolerance
  bool residual_verdict = false;     // residual <= tolerance * T
  bool formulations_agree() const { return verdict == residual_verdict; }
};

DDReport check_dd(const SystemModel& model, const ControlSchedule& schedule,
                  double tol = kDefaultDDTolerance);

// Real surrogate whose sign change marks Q^(0) = 0 along a one-parameter
// family: Re <Q, Q^(0)> / |Q|^2. For the sinusoidal qubit it equals
// J_0(mu/pi), i.e. the DD integral over [-pi, pi] divided by 2 pi.
double zero_mode_surrogate(const SystemModel& model, const ControlSchedule& schedule);

using ScheduleFamily = std::function<ControlSchedule(double)>;

struct TuneResult {
  double mu = 0.0;
  double surrogate = 0.0;
  double zero_mode_norm = 0.0;
  int evaluations = 0;
};

// Finds mu in [lo, hi] with |Q^(0)(mu)| < tol. Throws SearchFailure (with the
// scan trace) if no root is found.
TuneResult tune_amplitude(const SystemModel& model, const ScheduleFamily& family, double lo, double hi,
                          double tol = 1e-8);

struct FourierTable {
  int cutoff = 0;
  double period = 0.0;
  std::map<int, ComplexMatrix> modes;                   // k -> Q^(k)
  std::map<std::pair<int, int>, ComplexMatrix> ladder;  // (k, a) -> Q_{k,a}, two-level models only
  double time_norm = 0.0;         // (1/T) int |Q(t)|_HS^2
  double parseval_defect = 0.0;   // |sum_k |Q^(k)|_HS^2 - time_norm|
  double tail_bound = 0.0;        // sum over K/2 < |k| <= K of |Q^(k)|_HS^2

  bool has_ladder() const { return !ladder.empty(); }
  const ComplexMatrix& mode(int k) const { return modes.at(k); }
  const ComplexMatrix& ladder_mode(int k, int a) const { return ladder.at({k, a}); }
};

// Ladder operators q_{-1} = P_top Q P_bottom and q_{+1} = P_bottom Q P_top for a
// nondegenerate two-level model (top = larger eigenvalue of H_s).
std::pair<ComplexMatrix, ComplexMatrix> ladder_operators(const SystemModel& model);

FourierTable fourier_modes(const SystemModel& model, const ControlSchedule& schedule, int cutoff);

// Doubles the cutoff until the tail bound drops below tail_tol (or max_cutoff).
FourierTable fourier_modes_auto(const SystemModel& model, const ControlSchedule& schedule,
                                double tail_tol = 1e-12, int max_cutoff = 2048);

// -(i / 2 pi k) sum_l exp(-2 pi i alpha_l k) dQ_l for k != 0, where dQ_l is the
// jump of V_c* q_a V_c at kick l; zero at k = 0 when DD holds.
ComplexMatrix qka_bangbang_closed_form(const SystemModel& model, const ControlSchedule& schedule, int k,
                                       int a);

// Schroedinger-picture state of the uncoupled, driven system:
// exp(-itH_s) V_c(t)* rho0 V_c(t) exp(itH_s).
ComplexMatrix effective_dynamics(const SystemModel& model, const ControlSchedule& schedule,
                                 const ComplexMatrix& rho0, double t);

// Integrated control phases int_0^t Theta_k(s) ds, one per eigenvector of H_s.
std::vector<double> control_phases(const SystemModel& model, const ControlSchedule& schedule, double t);

}  // namespace decoshield::control
