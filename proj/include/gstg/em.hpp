#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gstg/model.hpp"
#include "gstg/problem.hpp"
#include "gstg/recovery.hpp"

namespace gstg {

// Exact evidence maximization: per iteration, posterior stats for the current
// alpha, then the closed-form coordinate maximizers for every alpha_i (the
// complete-data expectation separates over coordinates, so the joint update
// is the exact M-step), then the eta step. Each stage is an ascent step, so
// the recorded objective trace is nondecreasing up to roundoff.
//
// logL_trace holds L at the start of every iteration plus one final entry
// after the last update, length iterations + 1.
//
// Initialization: alpha_i = max((a_i^T y)^2 / ||a_i||^4, tau), the
// matched-filter energy per basis, floored at tau so every basis starts
// active at a scale the prior can represent. eta starts at h.eta.
//
// Convergence: ||alpha_new - alpha||_inf <= tol * ||alpha_new||_inf.
// Coordinates never hit zero exactly; the final support is alpha_i >
// prune_rel * max(alpha), and x_hat is zeroed off it.
//
// alpha_out, when non-null, receives the final unpruned variances.
inline RecoveryResult recover_em(const SensingProblem& problem,
                                 const Hyperparams& h, const EmOptions& opts,
                                 Eigen::VectorXd* alpha_out = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  h.validate();
  opts.validate();
  const Eigen::MatrixXd& A = problem.A;
  const Eigen::VectorXd& y = problem.y;
  const Eigen::Index M = A.rows(), N = A.cols();
  if (y.size() != M) throw std::invalid_argument("recover_em: dimension mismatch");
  if (!(problem.sigma2 > 0.0))
    throw std::invalid_argument("recover_em: sigma2 must be > 0");
  const double sigma2 = problem.sigma2;

  RecoveryResult res;
  res.x_hat = Eigen::VectorXd::Zero(N);
  res.eta_final = h.eta;
  if (y.isZero(0.0)) {
    if (alpha_out) *alpha_out = Eigen::VectorXd::Zero(N);
    res.wall_time = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    return res;
  }

  Eigen::VectorXd alpha(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double nrm2 = A.col(i).squaredNorm();
    const double proj = A.col(i).dot(y);
    const double mf = nrm2 > 0.0 ? (proj * proj) / (nrm2 * nrm2) : 0.0;
    alpha[i] = std::max(mf, h.tau);
  }

  Hyperparams hc = h;
  PosteriorStats stats;
  int iters = 0;
  for (int k = 1; k <= opts.max_iters; ++k) {
    stats = posterior_stats(A, y, alpha, sigma2);
    res.logL_trace.push_back(log_likelihood(stats, alpha, hc));

    Eigen::VectorXd alpha_new = alpha;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (alpha[i] <= 0.0) continue;  // excluded coordinates stay out
      const double Ex2 = stats.mu[i] * stats.mu[i] + stats.Sigma(i, i);
      alpha_new[i] = Ex2 > 0.0 ? update_alpha_em(Ex2, hc) : 0.0;
    }
    if (opts.update_eta_every > 0 && k % opts.update_eta_every == 0)
      hc.eta = update_eta(alpha_new, hc);

    const double delta = (alpha_new - alpha).lpNorm<Eigen::Infinity>();
    const double scale = alpha_new.lpNorm<Eigen::Infinity>();
    alpha = alpha_new;
    iters = k;
    if (delta <= opts.tol * scale) break;
  }

  stats = posterior_stats(A, y, alpha, sigma2);
  res.logL_trace.push_back(log_likelihood(stats, alpha, hc));
  res.iterations = iters;
  res.eta_final = hc.eta;
  if (alpha_out) *alpha_out = alpha;

  const double thr = opts.prune_rel * alpha.maxCoeff();
  res.x_hat = stats.mu;
  for (Eigen::Index i = 0; i < N; ++i)
    if (alpha[i] <= thr) res.x_hat[i] = 0.0;
  for (Eigen::Index i = 0; i < N; ++i)
    if (res.x_hat[i] != 0.0) res.support.push_back(int(i));

  res.wall_time = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace gstg
