#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gstg/problem.hpp"
#include "gstg/recovery.hpp"

namespace gstg {

struct OmpOptions {
  int max_support = 0;          // 0 selects min(M, N)
  double residual_tol = 1e-12;  // absolute floor on ||r||^2, for sigma2 = 0

  void validate(int M) const {
    if (max_support < 0 || max_support > M)
      throw std::invalid_argument("OmpOptions: max_support must be in [0, M]");
    if (!(residual_tol >= 0.0))
      throw std::invalid_argument("OmpOptions: residual_tol must be >= 0");
  }
};

// Orthogonal matching pursuit with the discrepancy-principle stopping rule
// ||r||^2 <= M sigma2 (or ||r||^2 <= residual_tol, whichever hits first).
// Each round picks the column most correlated with the residual (ties to the
// lowest index, zero columns skipped) and refits the active set by least
// squares. A rank-deficient active set, or a step that fails to reduce the
// residual, stops early and sets *warning.
//
// logL_trace records -||r||^2 per round so the trace is nondecreasing like
// the Bayesian solvers'. eta_final is not meaningful here and stays 0.
inline RecoveryResult recover_omp(const SensingProblem& problem,
                                  const OmpOptions& opts,
                                  bool* warning = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd& A = problem.A;
  const Eigen::VectorXd& y = problem.y;
  const int M = int(A.rows()), N = int(A.cols());
  if (y.size() != M) throw std::invalid_argument("recover_omp: dimension mismatch");
  if (!(problem.sigma2 >= 0.0))
    throw std::invalid_argument("recover_omp: sigma2 must be >= 0");
  opts.validate(M);
  if (warning) *warning = false;

  const int kmax = (opts.max_support == 0) ? std::min(M, N) : opts.max_support;
  const double stop2 = std::max(M * problem.sigma2, opts.residual_tol);

  RecoveryResult res;
  res.x_hat = Eigen::VectorXd::Zero(N);

  Eigen::VectorXd colnorm(N);
  for (int n = 0; n < N; ++n) colnorm[n] = A.col(n).norm();

  std::vector<int> active;
  std::vector<char> in_active(N, 0);
  Eigen::VectorXd r = y;
  double r2 = r.squaredNorm();
  res.logL_trace.push_back(-r2);
  Eigen::VectorXd coef;

  while (r2 > stop2 && int(active.size()) < kmax) {
    int best = -1;
    double bestc = 0.0;
    for (int n = 0; n < N; ++n) {
      if (in_active[n] || colnorm[n] == 0.0) continue;
      const double c = std::abs(A.col(n).dot(r)) / colnorm[n];
      if (c > bestc) {
        bestc = c;
        best = n;
      }
    }
    if (best < 0) break;  // residual orthogonal to every remaining column

    active.push_back(best);
    in_active[best] = 1;
    const int P = int(active.size());
    Eigen::MatrixXd Phi(M, P);
    for (int k = 0; k < P; ++k) Phi.col(k) = A.col(active[k]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
    if (qr.rank() < P) {
      active.pop_back();
      in_active[best] = 0;
      if (warning) *warning = true;
      break;
    }
    const Eigen::VectorXd cand = qr.solve(y);
    const Eigen::VectorXd rnew = y - Phi * cand;
    const double r2new = rnew.squaredNorm();
    if (!(r2new < r2)) {
      active.pop_back();
      in_active[best] = 0;
      if (warning) *warning = true;
      break;
    }
    coef = cand;
    r = rnew;
    r2 = r2new;
    res.logL_trace.push_back(-r2);
  }

  for (size_t k = 0; k < active.size(); ++k) res.x_hat[active[k]] = coef[k];
  for (int n = 0; n < N; ++n)
    if (res.x_hat[n] != 0.0) res.support.push_back(n);
  res.iterations = int(active.size());
  res.wall_time = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace gstg
