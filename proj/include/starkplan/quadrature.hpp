#pragma once

#include <array>
#include <cmath>
#include <functional>

namespace starkplan {

namespace detail {

// Gauss-Kronrod 15(7) nodes and weights on [-1, 1] (QUADPACK dqk15 values).
inline constexpr std::array<double, 8> kGk15Nodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr std::array<double, 8> kGk15Weights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGauss7Weights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <typename F>
inline void gk15_panel(const F& f, double a, double b, double* kronrod,
                       double* err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double x = kGk15Nodes[i] * h;
    const double fv = (i == 7) ? f(c) : f(c - x) + f(c + x);
    resk += kGk15Weights[i] * fv;
    if (i % 2 == 1) resg += kGauss7Weights[i / 2] * fv;
  }
  resk *= h;
  resg *= h;
  *kronrod = resk;
  *err = std::abs(resk - resg);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod 15(7) integration with an absolute tolerance.
/// Bisects panels until the local Kronrod-Gauss discrepancy, summed, is
/// below abs_tol. Depth-limited; smooth integrands converge in a few panels.
template <typename F>
inline double integrate_adaptive(const F& f, double a, double b,
                                 double abs_tol = 1e-8, int max_depth = 40) {
  struct Panel {
    double a, b, value, err;
    int depth;
  };
  double value, err;
  detail::gk15_panel(f, a, b, &value, &err);
  if (err <= abs_tol) return value;

  std::function<double(double, double, double, int)> refine =
      [&](double lo, double hi, double tol, int depth) -> double {
    double v, e;
    detail::gk15_panel(f, lo, hi, &v, &e);
    if (e <= tol || depth >= max_depth) return v;
    const double mid = 0.5 * (lo + hi);
    return refine(lo, mid, 0.5 * tol, depth + 1) +
           refine(mid, hi, 0.5 * tol, depth + 1);
  };
  return refine(a, b, abs_tol, 0);
}

}  // namespace starkplan
