#include <doctest.h>

#include <numbers>

#include "decoshield/errors.hpp"
#include "decoshield/reservoir.hpp"
#include "oracles.hpp"

using namespace decoshield;
using namespace decoshield::reservoir;

namespace {

const double kPi = std::numbers::pi;

// Independent evaluation of G for the gaussian-p form factor.
double g_gaussian_p(double p, double beta) {
  const double f = std::abs(p) * std::exp(-p * p / 2);
  const double sigma = 1.0 / (1.0 + std::exp(-beta * p));
  return 4 * kPi * std::pow(p, 4) * f * f * sigma * sigma;
}

}  // namespace

TEST_CASE("logistic is stable at extreme arguments") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(std::isfinite(logistic(-800.0)));
  CHECK(logistic(-3.0) == doctest::Approx(1.0 / (1.0 + std::exp(3.0))).epsilon(1e-15));
}

TEST_CASE("form factor registry") {
  const auto names = form_factor_names();
  CHECK(std::find(names.begin(), names.end(), "gaussian-p") != names.end());
  CHECK_THROWS_AS(make_form_factor("lorentzian", 1.0), ArgumentError);
  CHECK_THROWS_AS(make_form_factor("gaussian", -1.0), ArgumentError);
}

TEST_CASE("spectral function of the default form factor") {
  const auto ff = make_form_factor("gaussian-p", 1.0);
  const auto g = spectral_function(ff);
  CHECK(g(1.0) == doctest::Approx(2.4706).epsilon(1e-4));
  for (double p : {-3.0, -0.5, 0.2, 1.0, 2.5}) CHECK(g(p) == doctest::Approx(g_gaussian_p(p, 1.0)).epsilon(1e-13));
  CHECK(g(g.p_hi() + 0.1) < kSupportThreshold);
  CHECK(g(g.p_lo() - 0.1) < kSupportThreshold);
}

TEST_CASE("detailed balance of G and the glued form factor") {
  for (double beta : {0.5, 1.0, 3.0}) {
    const auto ff = make_form_factor("gaussian-p", beta);
    const auto g = spectral_function(ff);
    for (double p : {0.3, 1.0, 2.0}) {
      CHECK(g(-p) / g(p) == doctest::Approx(std::exp(-2 * beta * p)).epsilon(1e-12));
      const double ratio = std::norm(glue_form_factor(ff, -p)) / std::norm(glue_form_factor(ff, p));
      CHECK(ratio == doctest::Approx(std::exp(-beta * p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("principal value of a gaussian is a Dawson function") {
  const auto g = SpectralFunction::from_callable("gauss", [](double p) { return std::exp(-p * p); }, 50.0);
  for (double x : {0.0, 0.3, 1.0, 2.2, -1.7}) {
    CHECK(pv_integral(g, x) == doctest::Approx(-2 * std::sqrt(kPi) * oracle::dawson(x)).epsilon(1e-9));
  }
  CHECK(oracle::dawson(1.0) == doctest::Approx(0.5380795069127684).epsilon(1e-14));
}

TEST_CASE("far-field moment expansion joins the near-field integral") {
  const auto ff = make_form_factor("gaussian-p", 1.0);
  const auto g = spectral_function(ff);
  const double x = g.center() + 2 * g.radius() + 0.5;
  REQUIRE(g.is_far(x));
  const auto ref = oracle::plemelj([&](double p) { return g(p); }, x, g.p_lo(), g.p_hi());
  CHECK(pv_integral(g, x) == doctest::Approx(ref.pv).epsilon(1e-6));
  CHECK(g.pv_far(x) == doctest::Approx(ref.pv).epsilon(1e-6));
}

TEST_CASE("pv_integral against the epsilon-regularized oracle") {
  const auto ff = make_form_factor("gaussian-p", 1.0);
  const auto g = spectral_function(ff);
  for (double x : {-2.0, 0.0, 1.0, 3.0, 12.0}) {
    const auto ref = oracle::plemelj([&](double p) { return g(p); }, x, g.p_lo(), g.p_hi());
    CHECK(pv_integral(g, x) == doctest::Approx(ref.pv).epsilon(1e-7));
    CHECK(std::abs(kPi * g(x) - ref.pi_g) < 1e-7 * (1.0 + ref.pi_g));
  }
}

TEST_CASE("discretized modes") {
  const auto ff = make_form_factor("gaussian-p", 2.0);
  const auto g = spectral_function(ff);
  const auto modes = discretize_modes(g, ff, 8, 6.0);
  REQUIRE(modes.size() == 8);
  CHECK(modes.spacing == doctest::Approx(0.75));
  CHECK(modes.omega[0] == doctest::Approx(0.375));
  for (int j = 0; j < modes.size(); ++j) {
    CHECK(modes.occupation[j] == doctest::Approx(1.0 / (1.0 + std::exp(2.0 * modes.omega[j]))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(discretize_modes(g, ff, 0, 6.0), ArgumentError);
}

TEST_CASE("coupling sum rule converges with the mode count") {
  const auto ff = make_form_factor("gaussian-p", 1.0);
  const auto g = spectral_function(ff);
  const double exact = coupling_sum_rule(ff, 6.0);
  double previous = 1.0;
  for (int n : {8, 16, 32, 64}) {
    const auto modes = discretize_modes(g, ff, n, 6.0);
    double sum = 0.0;
    for (double f : modes.coupling) sum += f * f;
    const double err = std::abs(sum - exact);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous < 1e-3 * exact);
}

TEST_CASE("analyticity proxies") {
  const auto model = control::SystemModel::spin_fermion();
  const auto ok = validate_a2(make_form_factor("gaussian-p", 1.0), model);
  CHECK(ok.all_passed());
  const auto gauss = validate_a2(make_form_factor("gaussian", 1.0), model);
  CHECK_FALSE(gauss.check("evenness").passed);
  const auto narrow = validate_a2(make_form_factor("gaussian-p", 1.0, 1.0, 1.0, 4.0), model);
  CHECK_FALSE(narrow.check("strip").passed);
  CHECK_THROWS(ok.check("nonexistent"));
}
