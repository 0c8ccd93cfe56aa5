#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gstg/errors.hpp"
#include "gstg/quadrature.hpp"

namespace gstg {

namespace detail {

inline constexpr double kEulerGamma = 0.5772156649015328606;

// Lower incomplete gamma by its power series,
//   gamma(a,x) = x^a e^-x sum_n x^n / (a (a+1) ... (a+n)),
// valid and fast for x < a + 1.
inline double lower_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return std::exp(a * std::log(x) - x) * sum;
}

// Continued fraction for the upper tail (modified Lentz), valid for
// x >= a + 1. Returns h with Gamma_x(a) = exp(a log x - x) * h.
inline double upper_gamma_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

// E1(x) for 0 < x < 1 by the log series.
inline double e1_series(double x) {
  double sum = -kEulerGamma - std::log(x);
  double term = 1.0;
  for (int k = 1; k < 100; ++k) {
    term *= -x / k;
    sum -= term / k;
    if (std::abs(term / k) < std::abs(sum) * 1e-17) break;
  }
  return sum;
}

// log Gamma_x(a) for large x from the asymptotic expansion
// Gamma_x(a) ~ x^(a-1) e^-x [1 + (a-1)/x + (a-1)(a-2)/x^2 + ...].
inline double log_upper_gamma_asymptotic(double a, double x) {
  double series = 1.0;
  double term = 1.0;
  for (int k = 1; k <= 10; ++k) {
    term *= (a - k) / x;
    series += term;
  }
  return (a - 1.0) * std::log(x) - x + std::log(series);
}

}  // namespace detail

// Upper incomplete gamma Gamma_x(eps) = integral over [x, inf) of
// t^(eps-1) e^-t. Series for x < eps+1, continued fraction otherwise;
// a quadrature fallback covers the tiny-eps corner where the
// complete-minus-lower subtraction loses digits.
inline double upper_incomplete_gamma(double eps, double x) {
  if (eps < 0.0) throw std::invalid_argument("upper_incomplete_gamma: eps < 0");
  if (x < 0.0) throw std::invalid_argument("upper_incomplete_gamma: x < 0");
  if (eps == 0.0 && x == 0.0)
    throw NumericalError("upper_incomplete_gamma: divergent at eps = 0, x = 0");

  if (x == 0.0) return std::tgamma(eps);
  if (x >= eps + 1.0)
    return std::exp(eps * std::log(x) - x) * detail::upper_gamma_cf(eps, x);
  if (eps == 0.0) return detail::e1_series(x);
  if (eps >= 1e-4)
    return std::tgamma(eps) - detail::lower_gamma_series(eps, x);

  // 0 < eps < 1e-4 and x < 1: split at t = 1. The head integral is smooth in
  // u = log t; the tail is the continued fraction at 1.
  const double tail = std::exp(-1.0) * detail::upper_gamma_cf(eps, 1.0);
  const double lo = std::log(x);
  const double head = quadrature::integrate(
      [eps](double u) { return std::exp(eps * u - std::exp(u)); }, lo, 0.0,
      1e-13);
  return head + tail;
}

// log of the above; usable far past the underflow point of the direct value
// (needed when the rate parameter is driven large during hyperparameter
// updates).
inline double log_upper_incomplete_gamma(double eps, double x) {
  if (x > 600.0) return detail::log_upper_gamma_asymptotic(eps, x);
  return std::log(upper_incomplete_gamma(eps, x));
}

}  // namespace gstg
