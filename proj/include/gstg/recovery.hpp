#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace gstg {

// Iteration controls shared by the EM and greedy solvers.
//   update_eta_every = k: refresh eta after every k-th iteration/action;
//                     0 holds eta fixed at its initial value.
//   prune_rel: EM-only; alpha below prune_rel * max(alpha) is clamped to 0
//              at the end (EM iterates never reach 0 exactly).
struct EmOptions {
  int max_iters = 1000;
  double tol = 1e-8;
  int update_eta_every = 1;
  double prune_rel = 1e-10;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("EmOptions: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("EmOptions: tol must be > 0");
    if (update_eta_every < 0)
      throw std::invalid_argument("EmOptions: update_eta_every must be >= 0");
    if (!(prune_rel > 0.0))
      throw std::invalid_argument("EmOptions: prune_rel must be > 0");
  }
};

struct RecoveryResult {
  Eigen::VectorXd x_hat;
  std::vector<int> support;       // = { i : x_hat[i] != 0 }, ascending
  int iterations = 0;
  std::vector<double> logL_trace; // nondecreasing up to roundoff slack
  double wall_time = 0.0;         // seconds, solver only
  double eta_final = 0.0;
};

}  // namespace gstg
