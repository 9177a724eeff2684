#pragma once

#include <cmath>
#include <utility>

namespace spectrum_queue::detail {

// Root of a decreasing function f on [lo, hi] with f(lo) >= 0 >= f(hi).
// Plain bisection; returns the bracket midpoint once its width is below tol.
template <typename F>
double bisect_decreasing(F&& f, double lo, double hi, double tol,
                         int max_iter = 200) {
  for (int i = 0; i < max_iter && (hi - lo) > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Maximizer of a unimodal function on [lo, hi] by golden-section search.
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol,
                  int max_iter = 200) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace spectrum_queue::detail
