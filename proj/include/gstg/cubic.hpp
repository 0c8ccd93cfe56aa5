#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gstg::cubic {

// Discriminant of l1*t^3 + l2*t^2 + l3*t + l4. Positive: three distinct real
// roots. Zero: a repeated root. Negative: one real root.
inline double discriminant(double l1, double l2, double l3, double l4) {
  return 18.0 * l1 * l2 * l3 * l4 - 4.0 * l2 * l2 * l2 * l4 +
         l2 * l2 * l3 * l3 - 4.0 * l1 * l3 * l3 * l3 -
         27.0 * l1 * l1 * l4 * l4;
}

namespace detail {

inline double cubic_eval(double l1, double l2, double l3, double l4, double x) {
  return ((l1 * x + l2) * x + l3) * x + l4;
}

inline double cubic_deriv(double l1, double l2, double l3, double x) {
  return (3.0 * l1 * x + 2.0 * l2) * x + l3;
}

// Guarded Newton: accepts a step only while |f| decreases, so a near-double
// root (derivative ~ 0) cannot send a closed-form root off to infinity.
inline double polish_root(double l1, double l2, double l3, double l4, double x) {
  double fx = std::abs(cubic_eval(l1, l2, l3, l4, x));
  for (int it = 0; it < 8; ++it) {
    const double d = cubic_deriv(l1, l2, l3, x);
    if (d == 0.0) break;
    const double step = cubic_eval(l1, l2, l3, l4, x) / d;
    if (!std::isfinite(step)) break;
    const double xn = x - step;
    const double fn = std::abs(cubic_eval(l1, l2, l3, l4, xn));
    if (!(fn < fx)) break;
    x = xn;
    fx = fn;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
  }
  return x;
}

}  // namespace detail

// All real roots, ascending, near-equal roots (within 1e-8*(1+|r|)) reported
// once. Closed form (trigonometric for three real roots, Cardano for one)
// plus Newton polishing on the original coefficients.
inline std::vector<double> real_roots(double l1, double l2, double l3, double l4) {
  if (l1 == 0.0)
    throw std::invalid_argument("real_roots: degenerate leading coefficient");

  // Depressed form: t = u + shift, u^3 + p u + q = 0.
  const double a = l2 / l1;
  const double b = l3 / l1;
  const double c = l4 / l1;
  const double p = b - a * a / 3.0;
  const double q = c - a * b / 3.0 + 2.0 * a * a * a / 27.0;
  const double shift = -a / 3.0;
  const double dd = -4.0 * p * p * p - 27.0 * q * q;  // same sign as discriminant

  std::vector<double> roots;
  if (dd > 0.0) {
    // Three real roots (p < 0 here): trigonometric form.
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k)
      roots.push_back(m * std::cos(theta - 2.0 * M_PI * k / 3.0) + shift);
  } else if (dd == 0.0) {
    if (p == 0.0) {
      roots.push_back(shift);  // triple root
    } else {
      roots.push_back(3.0 * q / p + shift);              // simple
      roots.push_back(-1.5 * q / p + shift);             // double
    }
  } else {
    // One real root; u is formed with magnitudes adding, no cancellation.
    const double s = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    const double u = std::cbrt(-q / 2.0 - std::copysign(s, q));
    const double v = (u != 0.0) ? -p / (3.0 * u) : 0.0;
    roots.push_back(u + v + shift);
  }

  for (double& r : roots) r = detail::polish_root(l1, l2, l3, l4, r);
  std::sort(roots.begin(), roots.end());

  std::vector<double> merged;
  for (double r : roots) {
    if (!merged.empty() &&
        r - merged.back() <=
            1e-8 * (1.0 + std::max(std::abs(r), std::abs(merged.back())))) {
      // Keep whichever copy sits closer to the curve.
      if (std::abs(detail::cubic_eval(l1, l2, l3, l4, r)) <
          std::abs(detail::cubic_eval(l1, l2, l3, l4, merged.back())))
        merged.back() = r;
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

// The single root in (0, inf) under the variance-update sign pattern l1 > 0,
// l2 > 0, l4 < 0 (one Descartes sign change regardless of l3). If the closed-form
// path lost the root to merging (it can sit within the merge window of a
// negative root when |l4| is tiny) or produced spurious extra positives (a
// complex pair misclassified as real near the discriminant boundary), the
// guaranteed single sign change f(0) < 0 < f(R) is bisected instead.
inline double unique_positive_root(double l1, double l2, double l3, double l4) {
  if (!(l1 > 0.0) || !(l2 > 0.0) || !(l4 < 0.0))
    throw std::invalid_argument(
        "unique_positive_root: requires l1 > 0, l2 > 0, l4 < 0");

  const auto roots = real_roots(l1, l2, l3, l4);
  double found = 0.0;
  int n_pos = 0;
  for (double r : roots)
    if (r > 0.0) {
      found = r;
      ++n_pos;
    }
  if (n_pos == 1) return found;

  double hi = 1.0 + std::max({std::abs(l2), std::abs(l3), std::abs(l4)}) / l1;
  while (!(detail::cubic_eval(l1, l2, l3, l4, hi) > 0.0)) hi *= 2.0;
  double lo = 0.0;
  while (hi - lo > 1e-15 * (1.0 + hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (detail::cubic_eval(l1, l2, l3, l4, mid) < 0.0 ? lo : hi) = mid;
  }
  return detail::polish_root(l1, l2, l3, l4, 0.5 * (lo + hi));
}

}  // namespace gstg::cubic
