#pragma once

// Exact dynamics of a driven system coupled to N fermionic modes, the
// reduced system trajectory, and its comparison with the coherence-preserving
// effective dynamics.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "decoshield/control.hpp"
#include "decoshield/operator_core.hpp"
#include "decoshield/reservoir.hpp"

namespace decoshield::exactsim {

using core::ComplexMatrix;
using core::SparseComplexMatrix;

inline constexpr long kMaxTotalDim = 1L << 14;
inline constexpr long kDensityDimLimit = 1L << 12;

struct TotalModel {
  control::SystemModel system;
  reservoir::ModeSet modes;
  double lambda = 0.0;
  control::ControlSchedule schedule;

  long reservoir_dim() const { return 1L << modes.size(); }
  long total_dim() const { return system.dim() * reservoir_dim(); }
};

// Jordan-Wigner annihilators a_0 .. a_{N-1} on the 2^N Fock space, mode 0 in
// the most significant position and |0> = empty in each factor.
std::vector<SparseComplexMatrix> annihilators(int n_modes);

// max over pairs of |{a_i, a_j*} - delta_ij| and |{a_i, a_j}|.
double car_defect(const std::vector<SparseComplexMatrix>& a);

SparseComplexMatrix reservoir_hamiltonian(const reservoir::ModeSet& modes);
// Phi = (1/sqrt 2) sum_j f_j (a_j + a_j*).
SparseComplexMatrix field_operator(const reservoir::ModeSet& modes);

// Lab-frame H(t) = (H_s + H_c(t)) (x) 1 + 1 (x) H_R + lambda Q (x) Phi. Throws
// ResourceError when d 2^N exceeds 2^14.
SparseComplexMatrix build_total_generator(const TotalModel& tm, double t);

// The generator in the frame rotating with the control,
// H~(t) = H_s (x) 1 + 1 (x) H_R + lambda V_c(t) Q V_c(t)* (x) Phi,
// so that U(t) = (V_c(t)* (x) 1) U~(t). Kicks only change the coupling term.
class RotatingGenerator {
 public:
  explicit RotatingGenerator(const TotalModel& tm);

  SparseComplexMatrix operator()(double t) const;
  double norm_bound() const { return norm_bound_; }
  // H~ does not depend on t.
  bool is_static() const { return static_; }
  // H~(t + T) = H~(t), i.e. Q(T) = Q.
  bool is_periodic() const { return periodic_; }

 private:
  control::ControlSchedule schedule_;
  ComplexMatrix q_;
  double lambda_ = 0.0;
  SparseComplexMatrix h0_;
  std::vector<SparseComplexMatrix> coupling_;  // E_mn (x) Phi, row-major in (m, n)
  double norm_bound_ = 0.0;
  bool static_ = false;
  bool periodic_ = false;
};

// Product state of diag(1 - n_j, n_j) over modes.
ComplexMatrix thermal_reservoir_state(const reservoir::ModeSet& modes);
std::vector<double> thermal_diagonal(const reservoir::ModeSet& modes);

enum class Method { automatic, density, unravel };

struct EvolveOptions {
  Method method = Method::automatic;
  double step = 0.0;        // 0: min(T/200, 0.01 / |H~|)
  int samples = 256;        // unraveling sample budget
  std::uint64_t seed = 0;   // unraveling sampler seed
  bool use_floquet = true;  // reuse one-period propagators when H~ is periodic
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ComplexMatrix> reduced;    // rho_s(t), computational basis
  std::vector<ComplexMatrix> reference;  // effective dynamics at the same times
  std::vector<double> deviation;         // trace distance reduced vs reference
  std::vector<double> total_trace;
  std::vector<double> total_purity;      // NaN for unraveled runs
  ComplexMatrix eigenbasis;              // columns phi_k of H_s
  std::string method;
  int distinct_configurations = 0;       // unraveling only
  double step = 0.0;

  std::size_t size() const { return times.size(); }
  // |<phi_m, rho_s(t_i) phi_n>|
  double coherence(std::size_t i, int m, int n) const;
  double population(std::size_t i, int k) const;
};

// Samples rho_s(t) at t = 0, sample_dt, 2 sample_dt, ... <= t_final (t_final
// itself is appended when it is off the grid). The initial total state is
// rho_s0 (x) rho_R.
Trajectory evolve(const TotalModel& tm, const ComplexMatrix& rho_s0, double t_final, double sample_dt,
                  const EvolveOptions& options = {});

struct BoundShape {
  double lambda = 0.0;
  double period = 0.0;
  double d_parameter = 0.0;
  double c_const = 1.0;
  double big_c_const = 1.0;
};

// C (|lambda| + (D |lambda| + 1) T + 1 - e^{-c t |lambda| T}).
double bound_shape(const BoundShape& b, double t);

struct DeviationReport {
  std::vector<double> times;
  std::vector<double> deviation;
  std::vector<double> retention;  // |rho_01(t)| / |rho_01(0)| in the H_s eigenbasis
  std::vector<double> population_drift;  // max_k |pop_k(t) - pop_k(0)|
  std::vector<double> bound;
  double sup_deviation = 0.0;
  double final_retention = 0.0;
  double max_population_drift = 0.0;
  double horizon = 0.0;
};

// Deviation of the trajectory from the effective dynamics, recomputed from
// scratch, over t <= horizon (everything when horizon <= 0).
DeviationReport compare_with_effective(const Trajectory& traj, const control::SystemModel& model,
                                       const control::ControlSchedule& schedule, const BoundShape& shape,
                                       double horizon = 0.0);

// CSV columns: t, re_ij, im_ij (computational basis, row-major), coherence_mn
// (m < n, H_s eigenbasis), deviation, pop_k.
std::string csv_header(int dim);
void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace decoshield::exactsim
