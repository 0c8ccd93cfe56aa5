#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gstg/errors.hpp"
#include "gstg/hyperparams.hpp"
#include "gstg/incomplete_gamma.hpp"
#include "gstg/quadrature.hpp"
#include "gstg/rng.hpp"

namespace gstg {

// log of the shifted-truncated-gamma density at alpha >= 0:
//   eps*log(eta) + (eps-1)*log(alpha+tau) - eta*(alpha+tau) - log Gamma_{eta*tau}(eps)
// Working in logs keeps the normalizer usable when eta*tau is large enough
// that Gamma_{eta*tau}(eps) underflows.
inline double stg_logpdf(double alpha, const Hyperparams& h) {
  h.validate();
  if (!(alpha >= 0.0)) throw std::invalid_argument("stg_logpdf: alpha must be >= 0");
  const double t = alpha + h.tau;
  double shape_term;
  if (h.eps == 1.0) {
    shape_term = 0.0;  // (eps-1)*log(t) could be 0*(-inf) at t=0
  } else if (t == 0.0) {
    return std::numeric_limits<double>::infinity();  // density diverges at 0
  } else {
    shape_term = (h.eps - 1.0) * std::log(t);
  }
  return h.eps * std::log(h.eta) + shape_term - h.eta * t -
         log_upper_incomplete_gamma(h.eps, h.eta * h.tau);
}

inline double stg_pdf(double alpha, const Hyperparams& h) {
  return std::exp(stg_logpdf(alpha, h));
}

// Marginal signal density p(x) = int_0^inf N(x | 0, alpha) * stg_pdf(alpha) dalpha.
// Integrated in u = log(alpha); the substitution regularizes the alpha->0
// endpoint and makes the e^{-eta*alpha} tail resolvable at any scale.
inline double marginal_pdf(double x, const Hyperparams& h) {
  h.validate();
  if (!std::isfinite(x)) throw std::invalid_argument("marginal_pdf: x must be finite");

  if (x == 0.0 && h.tau == 0.0) {
    // alpha^{eps-3/2} e^{-eta*alpha} near 0: integrable only for eps > 1/2,
    // and then the integral is a gamma-function ratio.
    if (h.eps <= 0.5)
      throw NumericalError("marginal_pdf: diverges at x=0 for tau=0, eps<=1/2");
    return std::sqrt(h.eta / (2.0 * M_PI)) *
           std::exp(std::lgamma(h.eps - 0.5) - std::lgamma(h.eps));
  }

  const double x2 = x * x;
  if (!(x2 < std::numeric_limits<double>::infinity())) return 0.0;
  const double log_norm = -0.5 * std::log(2.0 * M_PI) + h.eps * std::log(h.eta) -
                          log_upper_incomplete_gamma(h.eps, h.eta * h.tau);
  const auto f = [&](double u) {
    const double a = std::exp(u);
    double shape_term;
    if (h.eps == 1.0) {
      shape_term = 0.0;
    } else {
      const double t = a + h.tau;
      if (t == 0.0) return 0.0;  // u = -inf never reached; guard anyway
      shape_term = (h.eps - 1.0) * std::log(t);
    }
    const double le = log_norm + 0.5 * u - x2 / (2.0 * a) + shape_term -
                      h.eta * (a + h.tau);
    return std::exp(le);
  };

  // Window: below u_lo the integrand decays at least like e^{u/2} relative to
  // its value at the nearest scale point; above u_hi the e^{-eta*alpha} factor
  // has already dropped by e^{-800}.
  double scale = 0.0;
  if (h.tau > 0.0) scale = std::min(scale, std::log(h.tau));
  if (x2 > 0.0) scale = std::min(scale, std::log(x2));
  scale = std::min(scale, -std::log(h.eta));
  const double u_lo = std::max(-690.0, scale - 90.0);
  const double u_hi = std::log(x2 + h.tau + 1.0 + 800.0 / h.eta);

  std::vector<double> brk;
  auto add = [&](double u) {
    if (u > u_lo && u < u_hi) brk.push_back(u);
  };
  if (h.tau > 0.0) {
    const double lt = std::log(h.tau);
    add(lt - 3.0); add(lt); add(lt + 3.0);
  }
  if (x2 > 0.0) {
    const double lx = std::log(x2);
    add(lx - 3.0); add(lx); add(lx + 3.0);
  }
  add(-std::log(h.eta));
  for (double u : {-400.0, -200.0, -100.0, -50.0, -20.0, -5.0, -2.0, 0.0, 2.0, 5.0})
    add(u);
  std::sort(brk.begin(), brk.end());

  return quadrature::integrate_split(f, u_lo, u_hi, brk.begin(), brk.end(), 1e-10);
}

namespace detail {

// Inverse-CDF draw of a variance alpha ~ STG(eps, eta, tau). The CDF is
//   F(a) = 1 - Gamma_{eta*(a+tau)}(eps) / Gamma_{eta*tau}(eps),
// solved for F(a) = u by bracketing + bisection. log-space normalizer again,
// so the ratio stays formed even when both gammas underflow.
inline double stg_sample_alpha(double u, const Hyperparams& h) {
  const double log_norm = log_upper_incomplete_gamma(h.eps, h.eta * h.tau);
  const double log_target = std::log1p(-u) + log_norm;  // want Gamma_{eta*b} = this
  auto excess = [&](double alpha) {
    return log_upper_incomplete_gamma(h.eps, h.eta * (alpha + h.tau)) - log_target;
  };
  double lo = 0.0;
  double hi = 1.0 / h.eta;
  int expand = 0;
  while (excess(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expand > 2200) throw NumericalError("stg_sample_alpha: bracket expansion failed");
  }
  while (hi - lo > 1e-12 * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Draws n signal coefficients from the hierarchical prior: alpha from the STG
// density by inverse-CDF, then x ~ N(0, alpha). Same seed, same output.
inline std::vector<double> sample_prior(std::size_t n, const Hyperparams& h,
                                        std::uint64_t seed) {
  h.validate();
  if (n == 0) throw std::invalid_argument("sample_prior: n must be >= 1");
  Rng rng(seed);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_uniform();              // in (0, 1]
    const double alpha = detail::stg_sample_alpha(1.0 - u, h);
    x[i] = std::sqrt(alpha) * rng.next_gaussian();
  }
  return x;
}

}  // namespace gstg
