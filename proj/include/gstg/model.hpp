#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gstg/cubic.hpp"
#include "gstg/errors.hpp"
#include "gstg/hyperparams.hpp"
#include "gstg/incomplete_gamma.hpp"

namespace gstg {

struct PosteriorStats {
  Eigen::VectorXd mu;     // length N, zero off the active set
  Eigen::MatrixXd Sigma;  // N x N, zero rows/columns off the active set
  double logdetC = 0.0;   // log|sigma2 I + A diag(alpha) A^T|
  double quadform = 0.0;  // y^T C^{-1} y
};

// Posterior of x given alpha. Coordinates with alpha_i = 0 are excluded from
// the solve and keep zero mu/Sigma entries. The active block is factored in
// the symmetric form
//   B = I + (1/sigma2) D (Phi^T Phi) D,   D = diag(sqrt(alpha)),
// whose eigenvalues are >= 1, so no reciprocal of a tiny alpha is formed.
// Identities used downstream:
//   log|C|        = M log sigma2 + log|B|
//   y^T C^{-1} y  = (1/sigma2) ||y - A mu||^2 + mu^T diag(1/alpha) mu
// with the second term computed as ||w||^2 for w = B^{-1} D Phi^T y / sigma2
// (so mu = D w and the 1/alpha never appears).
inline PosteriorStats posterior_stats(const Eigen::MatrixXd& A,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& alpha,
                                      double sigma2) {
  const Eigen::Index M = A.rows(), N = A.cols();
  if (y.size() != M || alpha.size() != N)
    throw std::invalid_argument("posterior_stats: dimension mismatch");
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("posterior_stats: sigma2 must be > 0");
  if (!A.allFinite() || !y.allFinite() || !alpha.allFinite())
    throw std::invalid_argument("posterior_stats: non-finite input");
  if ((alpha.array() < 0.0).any())
    throw std::invalid_argument("posterior_stats: alpha must be >= 0");

  PosteriorStats st;
  st.mu = Eigen::VectorXd::Zero(N);
  st.Sigma = Eigen::MatrixXd::Zero(N, N);

  std::vector<Eigen::Index> act;
  act.reserve(N);
  for (Eigen::Index i = 0; i < N; ++i)
    if (alpha[i] > 0.0) act.push_back(i);

  if (act.empty()) {
    st.logdetC = double(M) * std::log(sigma2);
    st.quadform = y.squaredNorm() / sigma2;
    return st;
  }

  const Eigen::Index P = Eigen::Index(act.size());
  Eigen::MatrixXd Phi(M, P);
  Eigen::VectorXd d(P);
  for (Eigen::Index k = 0; k < P; ++k) {
    Phi.col(k) = A.col(act[k]);
    d[k] = std::sqrt(alpha[act[k]]);
  }

  Eigen::MatrixXd B = (Phi.transpose() * Phi) / sigma2;
  B.array().colwise() *= d.array();
  B.array().rowwise() *= d.transpose().array();
  B.diagonal().array() += 1.0;

  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success)
    throw SingularSystemError("posterior_stats: factorization failed");
  if (llt.rcond() < 1e-14)
    throw SingularSystemError("posterior_stats: active system condition beyond 1e14");

  const Eigen::VectorXd rhs = d.asDiagonal() * (Phi.transpose() * y) / sigma2;
  const Eigen::VectorXd w = llt.solve(rhs);
  const Eigen::VectorXd mu_act = d.asDiagonal() * w;

  Eigen::MatrixXd Binv = llt.solve(Eigen::MatrixXd::Identity(P, P));
  Eigen::MatrixXd Sig_act = d.asDiagonal() * Binv * d.asDiagonal();

  double logdetB = 0.0;
  for (Eigen::Index k = 0; k < P; ++k)
    logdetB += 2.0 * std::log(llt.matrixLLT()(k, k));

  st.logdetC = double(M) * std::log(sigma2) + logdetB;
  st.quadform = (y - Phi * mu_act).squaredNorm() / sigma2 + w.squaredNorm();
  for (Eigen::Index k = 0; k < P; ++k) {
    st.mu[act[k]] = mu_act[k];
    for (Eigen::Index l = 0; l < P; ++l) st.Sigma(act[k], act[l]) = Sig_act(k, l);
  }
  return st;
}

// Evidence objective over (alpha, eta), up to the fixed constant
// -(M/2) log(2 pi), which is dropped:
//   L = -1/2 logdetC - 1/2 quadform
//       + (eps-1) sum_i log(alpha_i + tau) - eta sum_i (alpha_i + tau)
//       + (N eps + c) log eta - N log Gamma_{eta tau}(eps) - d eta.
// With tau = 0 and eps < 1 the prior is improper at alpha = 0 and L diverges
// to +inf whenever some alpha_i = 0; that value is returned as-is.
inline double log_likelihood(const PosteriorStats& stats,
                             const Eigen::VectorXd& alpha, const Hyperparams& h) {
  h.validate();
  const double N = double(alpha.size());
  double sum_log = 0.0;
  double sum_at = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const double t = alpha[i] + h.tau;
    sum_at += t;
    if (h.eps != 1.0) {
      if (t == 0.0) return std::numeric_limits<double>::infinity();
      sum_log += std::log(t);
    }
  }
  return -0.5 * (stats.logdetC + stats.quadform) + (h.eps - 1.0) * sum_log -
         h.eta * sum_at + (N * h.eps + h.c) * std::log(h.eta) -
         N * log_upper_incomplete_gamma(h.eps, h.eta * h.tau) - h.d * h.eta;
}

// M-step for one coordinate given its posterior second moment
// Ex2 = mu_i^2 + Sigma_ii: the stationarity condition of the expected
// complete-data objective is
//   f(t) = 2 eta t^3 + (3 - 2 eps + 2 eta tau) t^2 + (tau - Ex2) t - tau Ex2 = 0,
// which has exactly one positive root (leading/quadratic coefficients > 0,
// constant < 0), and that root is the coordinate maximizer. For tau = 0 the
// cubic collapses to t (2 eta t^2 + (3-2 eps) t - Ex2) and the positive
// quadratic root is returned.
inline double update_alpha_em(double Ex2, const Hyperparams& h) {
  h.validate();
  if (!(Ex2 > 0.0)) throw std::invalid_argument("update_alpha_em: Ex2 must be > 0");
  if (h.tau == 0.0) {
    const double b = 3.0 - 2.0 * h.eps;
    return 2.0 * Ex2 / (b + std::sqrt(b * b + 8.0 * h.eta * Ex2));
  }
  return cubic::unique_positive_root(2.0 * h.eta,
                                     3.0 - 2.0 * h.eps + 2.0 * h.eta * h.tau,
                                     h.tau - Ex2, -h.tau * Ex2);
}

namespace detail {

// eta-profile of L at fixed alpha, as a function of theta = log(eta):
//   psi(theta) = (N eps + c) theta - e^theta (sum_i(alpha_i + tau) + d)
//                - N log Gamma_{e^theta tau}(eps).
struct EtaObjective {
  double a_coef;  // N eps + c
  double sa;      // sum(alpha_i + tau) + d
  double n;
  double eps, tau;

  double value(double theta) const {
    const double eta = std::exp(theta);
    return a_coef * theta - eta * sa -
           n * log_upper_incomplete_gamma(eps, eta * tau);
  }
  // d/deta log Gamma_{eta tau}(eps) = -tau (eta tau)^{eps-1} e^{-eta tau}
  //                                    / Gamma_{eta tau}(eps).
  double deriv(double theta) const {
    const double eta = std::exp(theta);
    const double x = eta * tau;
    const double lg = log_upper_incomplete_gamma(eps, x);
    const double dpen = eta * tau * std::exp((eps - 1.0) * std::log(x) - x - lg);
    return a_coef - eta * sa + n * dpen;
  }
};

}  // namespace detail

// Maximizes the eta-profile of L over theta = log(eta) in [-40, 40]:
// coarse grid, then golden-section on the bracketing cell, then a few
// guarded Newton steps on the gradient. Never returns an eta that lowers L
// relative to h.eta (falls back to the incumbent), so the update is an
// ascent step by construction.
inline double update_eta(const Eigen::VectorXd& alpha, const Hyperparams& h) {
  h.validate();
  if ((alpha.array() < 0.0).any() || !alpha.allFinite())
    throw std::invalid_argument("update_eta: alpha must be finite and >= 0");
  constexpr double kThetaLo = -40.0, kThetaHi = 40.0;
  const double n = double(alpha.size());
  const double a_coef = n * h.eps + h.c;
  const double sa = (alpha.array() + h.tau).sum() + h.d;

  if (h.tau == 0.0) {
    // Gamma_{eta*0}(eps) = Gamma(eps): no eta dependence; stationary point
    // (N eps + c)/eta = sum(alpha) + d in closed form, clamped to the box.
    double eta;
    if (a_coef <= 0.0)
      eta = std::exp(kThetaLo);
    else if (sa <= 0.0)
      eta = std::exp(kThetaHi);
    else
      eta = a_coef / sa;
    return std::clamp(eta, std::exp(kThetaLo), std::exp(kThetaHi));
  }

  const detail::EtaObjective obj{a_coef, sa, n, h.eps, h.tau};

  constexpr int kGrid = 161;
  double best_theta = kThetaLo;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double t = kThetaLo + (kThetaHi - kThetaLo) * i / (kGrid - 1);
    const double v = obj.value(t);
    if (v > best_val) {
      best_val = v;
      best_theta = t;
    }
  }
  const double cell = (kThetaHi - kThetaLo) / (kGrid - 1);
  double lo = std::max(kThetaLo, best_theta - cell);
  double hi = std::min(kThetaHi, best_theta + cell);

  // Golden-section to ~1e-10 in theta.
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
  double f1 = obj.value(x1), f2 = obj.value(x2);
  while (hi - lo > 1e-10 * (1.0 + std::abs(lo) + std::abs(hi))) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = obj.value(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = obj.value(x2);
    }
  }
  double theta = 0.5 * (lo + hi);

  // Newton polish on the gradient; numerical second derivative. Steps that
  // leave [kThetaLo, kThetaHi] or fail to shrink the gradient are rejected.
  for (int it = 0; it < 6; ++it) {
    const double g = obj.deriv(theta);
    const double step_h = 1e-6 * (1.0 + std::abs(theta));
    const double gpp = (obj.deriv(theta + step_h) - obj.deriv(theta - step_h)) / (2.0 * step_h);
    if (!(gpp < 0.0)) break;
    const double tn = theta - g / gpp;
    if (!std::isfinite(tn) || tn < kThetaLo || tn > kThetaHi) break;
    if (!(std::abs(obj.deriv(tn)) < std::abs(g))) break;
    const double moved = std::abs(tn - theta);
    theta = tn;
    if (moved <= 1e-12 * (1.0 + std::abs(theta))) break;
  }

  const double theta_old = std::log(h.eta);
  if (theta_old >= kThetaLo && theta_old <= kThetaHi &&
      obj.value(theta_old) > obj.value(theta))
    theta = theta_old;
  return std::exp(theta);
}

}  // namespace gstg
