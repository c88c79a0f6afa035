#include "decoshield/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "decoshield/errors.hpp"
#include "decoshield/quadrature.hpp"

namespace decoshield::reservoir {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr int kMoments = 64;

}  // namespace

FormFactor make_form_factor(const std::string& name, double beta, double amplitude, double width, double r_max) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("form factor: beta must be positive");
  if (!(width > 0.0) || !std::isfinite(width)) throw ArgumentError("form factor: width must be positive");
  if (!std::isfinite(amplitude)) throw ArgumentError("form factor: amplitude must be finite");
  FormFactor ff;
  ff.name = name;
  ff.beta = beta;
  ff.r_max = r_max;
  if (name == "gaussian-p") {
    ff.profile = [amplitude, width](double p) { return amplitude * p * std::exp(-p * p / (2.0 * width * width)); };
  } else if (name == "gaussian") {
    ff.profile = [amplitude, width](double p) { return amplitude * std::exp(-p * p / (2.0 * width * width)); };
  } else if (name == "ohmic-exp") {
    ff.profile = [amplitude, width](double p) { return amplitude * std::exp(-p / width); };
  } else {
    throw ArgumentError("unknown form factor '" + name + "'");
  }
  return ff;
}

std::vector<std::string> form_factor_names() { return {"gaussian-p", "gaussian", "ohmic-exp"}; }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Complex glue_form_factor(const FormFactor& ff, double p) {
  // Radial real profiles make the conjugation on p < 0 a no-op.
  return std::abs(p) * std::sqrt(logistic(ff.beta * p)) * ff.profile(std::abs(p));
}

// ---------------------------------------------------------------------------

SpectralFunction::SpectralFunction(std::string name, std::function<double(double)> g, double p_lo, double p_hi)
    : name_(std::move(name)), g_(std::move(g)), p_lo_(p_lo), p_hi_(p_hi) {
  if (!(p_hi > p_lo)) throw ArgumentError("SpectralFunction: empty support");
  auto integrand = [this](double p) {
    Eigen::VectorXd v(kMoments);
    const double u = (p - center()) / radius();
    double pw = g_(p);
    for (int n = 0; n < kMoments; ++n) {
      v[n] = pw;
      pw *= u;
    }
    return v;
  };
  std::vector<double> pts;
  for (int i = 0; i <= 16; ++i) pts.push_back(p_lo_ + (p_hi_ - p_lo_) * i / 16.0);
  // Moments of the rescaled variable stay below the zeroth one, so a single
  // relative tolerance serves all of them.
  Eigen::VectorXd m = quad::integrate(integrand, std::span<const double>(pts), 0.0, 1e-14, 4000).value;
  double scale = 1.0;
  for (int n = 0; n < kMoments; ++n) {
    moments_.push_back(m[n] * scale);
    scale *= radius();
  }
}

SpectralFunction SpectralFunction::from_callable(std::string name, std::function<double(double)> g,
                                                 double search_limit) {
  // Peak on a coarse grid, then walk outward until G drops below threshold.
  constexpr int kGrid = 4000;
  double peak_p = 0.0, peak = -1.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double p = -search_limit + 2.0 * search_limit * i / kGrid;
    const double v = g(p);
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << "spectral function '" << name << "' is negative or non-finite at p = " << p;
      throw NumericError(os.str());
    }
    if (v > peak) {
      peak = v;
      peak_p = p;
    }
  }
  if (!(peak > kSupportThreshold)) throw NumericError("spectral function '" + name + "' vanishes identically");
  auto walk = [&](double dir) {
    double step = 1e-2 * std::max(1.0, search_limit / kGrid);
    double p = peak_p;
    // Keep going until G stays below threshold over a window of 64 steps.
    int quiet = 0;
    double last_loud = p;
    while (std::abs(p) <= search_limit && quiet < 64) {
      p += dir * step;
      if (g(p) >= kSupportThreshold) {
        quiet = 0;
        last_loud = p;
      } else {
        ++quiet;
      }
      if (quiet == 0 && std::abs(p - peak_p) > 100 * step) step *= 1.05;
    }
    return last_loud + dir * step;
  };
  return SpectralFunction(std::move(name), std::move(g), walk(-1.0), walk(1.0));
}

double SpectralFunction::pv_far(double x) const {
  const double y = x - center();
  double acc = 0.0, ypow = y;
  for (int n = 0; n < kMoments; ++n) {
    const double term = moments_[n] / ypow;
    acc += term;
    if (n > 4 && std::abs(term) < 1e-18 * std::abs(acc)) break;
    ypow *= y;
  }
  return -acc;
}

SpectralFunction spectral_function(const FormFactor& ff) {
  auto profile = ff.profile;
  const double beta = ff.beta;
  auto g = [profile, beta](double p) {
    const double s = logistic(beta * p);
    const double f = profile(std::abs(p));
    const double p2 = p * p;
    return kFourPi * p2 * p2 * f * f * s * s;
  };
  // Search range follows the profile's decay; the registry entries are all
  // negligible long before 1e3.
  return SpectralFunction::from_callable(ff.name, g, 200.0);
}

double pv_integral(const SpectralFunction& g, double x, double abs_tol) {
  if (!std::isfinite(x)) throw ArgumentError("pv_integral: non-finite evaluation point");
  if (g.is_far(x)) return g.pv_far(x);
  const double reach = std::max(g.p_hi() - x, x - g.p_lo());
  auto integrand = [&](double p) { return (g(x + p) - g(x - p)) / p; };
  std::vector<double> pts{0.0, reach};
  for (double b : {std::abs(g.p_hi() - x), std::abs(x - g.p_lo()), std::abs(x - g.center())}) {
    if (b > 0.0 && b < reach) pts.push_back(b);
  }
  for (int i = 1; i < 8; ++i) pts.push_back(reach * i / 8.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const auto body = quad::integrate(integrand, std::span<const double>(pts), 0.1 * abs_tol, 0.0, 8000);
  if (!body.converged) {
    std::ostringstream os;
    os << "pv_integral: quadrature did not converge at x = " << x << " (error estimate " << body.error
       << ", " << body.evaluations << " evaluations)";
    throw NumericError(os.str());
  }
  // Beyond `reach` both samples lie outside the support; confirm the tail.
  const auto tail = quad::integrate(integrand, reach, 4.0 * reach + 1.0, 0.1 * abs_tol);
  if (std::abs(tail.value) + tail.error > abs_tol) {
    std::ostringstream os;
    os << "pv_integral: tail estimate " << tail.value << " exceeds tolerance at x = " << x;
    throw NumericError(os.str());
  }
  return body.value;
}

// ---------------------------------------------------------------------------

ModeSet discretize_modes(const SpectralFunction& g, const FormFactor& ff, int n, double p_max) {
  if (n <= 0) throw ArgumentError("discretize_modes: N must be >= 1");
  if (!(p_max > 0.0) || !std::isfinite(p_max)) throw ArgumentError("discretize_modes: p_max must be positive");
  (void)g;
  ModeSet modes;
  modes.beta = ff.beta;
  modes.spacing = p_max / n;
  for (int j = 1; j <= n; ++j) {
    const double w = (j - 0.5) * modes.spacing;
    const double f = ff.profile(w);
    modes.omega.push_back(w);
    modes.coupling.push_back(std::sqrt(modes.spacing * kFourPi) * w * std::abs(f));
    modes.occupation.push_back(logistic(-ff.beta * w));
  }
  return modes;
}

double coupling_sum_rule(const FormFactor& ff, double p_max) {
  auto integrand = [&](double p) {
    const double f = ff.profile(p);
    return kFourPi * p * p * f * f;
  };
  return quad::integrate(integrand, 0.0, p_max, 1e-15, 1e-14).value;
}

// ---------------------------------------------------------------------------

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ArgumentError("validation report has no check named '" + name + "'");
}

namespace {

// int_{-L}^{L} (1 + p^2) w(p) dp at L and 2L; finite when the two agree.
ValidationCheck moment_check(std::string name, const std::function<double(double)>& w, double scale) {
  ValidationCheck c;
  c.name = std::move(name);
  c.threshold = 1e-6;
  auto integrand = [&](double p) { return (1.0 + p * p) * w(p); };
  auto over = [&](double l) {
    std::vector<double> pts;
    for (int i = -16; i <= 16; ++i) pts.push_back(l * i / 16.0);
    return quad::integrate(integrand, std::span<const double>(pts), 1e-14, 1e-12, 8000).value;
  };
  const double l = 64.0 * scale;
  const double m1 = over(l);
  const double m2 = over(2.0 * l);
  c.value = std::isfinite(m2) ? std::abs(m2 - m1) / std::max(std::abs(m2), 1e-300) : INFINITY;
  c.passed = std::isfinite(m2) && c.value <= c.threshold;
  std::ostringstream os;
  os << "moment " << m2 << " on [-" << 2.0 * l << ", " << 2.0 * l << "], relative change " << c.value
     << " from half the range";
  c.detail = os.str();
  return c;
}

}  // namespace

ValidationReport validate_a2(const FormFactor& ff, const control::SystemModel& model) {
  ValidationReport rep;

  ValidationCheck strip;
  strip.name = "strip";
  strip.value = ff.r_max;
  strip.threshold = 8.0 * model.hs_norm();
  strip.passed = ff.r_max > strip.threshold;
  strip.detail = "r_max must exceed 8 |H_s|";
  rep.checks.push_back(strip);

  // Even extension of p f(p) is smooth at 0 only if the one-sided slope vanishes.
  ValidationCheck even;
  even.name = "evenness";
  const double h = 1e-3;
  auto e = [&](double p) { return p * ff.profile(p); };
  even.value = std::abs((-3.0 * e(0.0) + 4.0 * e(h) - e(2.0 * h)) / (2.0 * h));
  even.threshold = 1e-8;
  even.passed = even.value <= even.threshold;
  even.detail = "one-sided slope of p f(p) at p = 0";
  rep.checks.push_back(even);

  const double beta = ff.beta;
  auto g2 = [&](double p) { return std::norm(glue_form_factor(ff, p)); };
  // |e^{-beta p/2} i conj(g_f(-p))|^2 = e^{-beta p} |g_f(-p)|^2, written without overflow.
  auto mirror = [&](double p) {
    const double a = std::abs(p);
    const double f = ff.profile(a);
    const double s = logistic(-beta * p);
    return std::exp(-beta * p) * s * a * a * f * f;
  };
  auto mirror_safe = [&](double p) {
    const double v = mirror(p);
    return std::isfinite(v) ? v : 0.0;
  };
  rep.checks.push_back(moment_check("moment", g2, 1.0));
  rep.checks.push_back(moment_check("moment-mirror", mirror_safe, 1.0));
  return rep;
}

}  // namespace decoshield::reservoir
