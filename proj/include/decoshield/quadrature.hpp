#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature over scalar, complex and
// dense-matrix valued integrands. Deterministic: the interval with the largest
// error estimate is bisected first, ties broken by position.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace decoshield::quad {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(std::complex<double> x) { return std::abs(x); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

// QUADPACK qk15 abscissae and weights.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
};

template <class T, class F>
Panel<T> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T kronrod = kWgk[7] * fc;
  T gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const T f1 = f(c - dx);
    const T f2 = f(c + dx);
    kronrod = kronrod + kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss = gauss + kWg[j / 2] * (f1 + f2);
  }
  T value = h * kronrod;
  const double err = magnitude(T(h * (kronrod - gauss)));
  return {a, b, std::move(value), err};
}

}  // namespace detail

// Integrate f over consecutive breakpoints (at least two, ascending).
template <class F>
auto integrate(F&& f, std::span<const double> points, double abs_tol, double rel_tol = 0.0,
               int max_panels = 2000) {
  using T = std::decay_t<decltype(f(0.0))>;
  std::vector<detail::Panel<T>> panels;
  Result<T> out;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (points[i + 1] > points[i]) panels.push_back(detail::gk15<T>(f, points[i], points[i + 1]));
  }
  out.evaluations = 15 * static_cast<int>(panels.size());
  auto total = [&]() {
    T acc = panels.front().value;
    double err = panels.front().error;
    for (std::size_t i = 1; i < panels.size(); ++i) {
      acc = acc + panels[i].value;
      err += panels[i].error;
    }
    return std::make_pair(acc, err);
  };
  if (panels.empty()) {
    out.value = T(0.0 * f(points.empty() ? 0.0 : points[0]));
    out.converged = true;
    return out;
  }
  for (;;) {
    auto [value, err] = total();
    out.value = value;
    out.error = err;
    if (err <= std::max(abs_tol, rel_tol * magnitude(value))) {
      out.converged = true;
      return out;
    }
    if (static_cast<int>(panels.size()) >= max_panels) return out;
    auto worst = std::max_element(panels.begin(), panels.end(),
                                  [](const auto& x, const auto& y) { return x.error < y.error; });
    const double a = worst->a, b = worst->b, m = 0.5 * (a + b);
    if (!(m > a && m < b)) return out;
    *worst = detail::gk15<T>(f, a, m);
    panels.push_back(detail::gk15<T>(f, m, b));
    out.evaluations += 30;
  }
}

template <class F>
auto integrate(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0, int max_panels = 2000) {
  const std::array<double, 2> pts{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(pts), abs_tol, rel_tol, max_panels);
}

}  // namespace decoshield::quad
