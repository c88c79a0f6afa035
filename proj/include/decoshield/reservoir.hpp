#pragma once

// Thermal fermionic reservoir: radial form factors, the glued form factor
// g_f, the spectral function G_f, principal-value integrals against G_f,
// numeric proxies for the analyticity assumption, and the finite mode set
// used by the exact simulator.

#include <functional>
#include <string>
#include <vector>

#include "decoshield/control.hpp"
#include "decoshield/operator_core.hpp"

namespace decoshield::reservoir {

using core::Complex;

// Radial form factor f(|p|) at inverse temperature beta. r_max only enters
// the strip-width check of validate_a2.
struct FormFactor {
  std::string name;
  std::function<double(double)> profile;  // f(p) for p >= 0
  double beta = 1.0;
  double r_max = 10.0;
};

// Registry entries, all scaled by `amplitude` with length scale `width`:
//   gaussian-p : p exp(-p^2 / 2 w^2)   (default)
//   gaussian   : exp(-p^2 / 2 w^2)
//   ohmic-exp  : exp(-p / w)
FormFactor make_form_factor(const std::string& name, double beta, double amplitude = 1.0, double width = 1.0,
                            double r_max = 10.0);
std::vector<std::string> form_factor_names();

// 1 / (1 + exp(-x)) without overflow.
double logistic(double x);

// g_f(p) = |p| (1 + e^{-beta p})^{-1/2} f(|p|), conjugated on the negative axis.
Complex glue_form_factor(const FormFactor& ff, double p);

// Real spectral weight G(p) >= 0 with an effective support [p_lo, p_hi]
// outside of which G < 1e-16.
class SpectralFunction {
 public:
  SpectralFunction(std::string name, std::function<double(double)> g, double p_lo, double p_hi);

  // Locates the support by scanning outward from the largest sample of G on
  // [-search_limit, search_limit].
  static SpectralFunction from_callable(std::string name, std::function<double(double)> g,
                                        double search_limit = 1e3);

  double operator()(double p) const { return g_(p); }
  const std::string& name() const { return name_; }
  double p_lo() const { return p_lo_; }
  double p_hi() const { return p_hi_; }
  double center() const { return 0.5 * (p_lo_ + p_hi_); }
  double radius() const { return 0.5 * (p_hi_ - p_lo_); }

  // int G(p) (p - c)^n dp about the support center, n < moments().size().
  const std::vector<double>& moments() const { return moments_; }

  // int G(q) / (q - x) dq for x at distance > 2 radius from the center,
  // summed from the moment expansion.
  double pv_far(double x) const;
  bool is_far(double x) const { return std::abs(x - center()) > 2.0 * radius(); }

 private:
  std::string name_;
  std::function<double(double)> g_;
  double p_lo_;
  double p_hi_;
  std::vector<double> moments_;
};

inline constexpr double kSupportThreshold = 1e-16;

// G_f(p) = 4 pi p^2 |g_f(p)|^2 / (1 + e^{-beta p}); the S^2 integral of the
// radial case contributes the surface measure 4 pi.
SpectralFunction spectral_function(const FormFactor& ff);

// lim_{eps -> 0} int_{|p| > eps} G(p + x) / p dp, computed as
// int_0^inf (G(x + p) - G(x - p)) / p dp. Throws NumericError when the
// quadrature or its tail estimate does not converge.
double pv_integral(const SpectralFunction& g, double x, double abs_tol = 1e-9);

struct ModeSet {
  std::vector<double> omega;       // midpoint frequencies, strictly increasing
  std::vector<double> coupling;    // f_j >= 0
  std::vector<double> occupation;  // Fermi-Dirac n_j
  double beta = 1.0;
  double spacing = 0.0;

  int size() const { return static_cast<int>(omega.size()); }
};

// omega_j = (j - 1/2) Delta with Delta = p_max / N, |f_j|^2 = Delta 4 pi
// omega_j^2 f(omega_j)^2 and n_j = 1 / (1 + e^{beta omega_j}). The spectral
// function argument is unused; the weights come from the form factor alone.
ModeSet discretize_modes(const SpectralFunction& g, const FormFactor& ff, int n, double p_max);

// int_0^{p_max} 4 pi p^2 f(p)^2 dp, the continuum value of sum_j f_j^2.
double coupling_sum_rule(const FormFactor& ff, double p_max);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
  const ValidationCheck& check(const std::string& name) const;
};

// Numeric proxies for the analyticity assumption on the form factor:
// "strip" (r_max > 8 |H_s|), "evenness" (p f(p) has no linear term at 0),
// "moment" and "moment-mirror" (finite weighted L^2 moments of g_f and of
// e^{-beta p/2} i conj(g_f(-p)) along the real axis).
ValidationReport validate_a2(const FormFactor& ff, const control::SystemModel& model);

}  // namespace decoshield::reservoir
