#pragma once

#include <stdexcept>

namespace gstg {

// Prior and noise parameters shared by both solvers.
//   tau    threshold (signal-power units), >= 0
//   eps    shape, in [0, 1]
//   eta    rate, > 0
//   sigma2 noise variance, > 0
//   c, d   hyperprior parameters for eta, >= 0 (0 = noninformative)
struct Hyperparams {
  double tau = 0.0;
  double eps = 0.01;
  double eta = 1.0;
  double sigma2 = 1.0;
  double c = 0.0;
  double d = 0.0;

  // Throws std::invalid_argument on violation. eps > 1 is rejected outright:
  // the prior stops being sparsity-inducing there and no semantics are
  // defined for it.
  void validate() const {
    if (!(tau >= 0.0)) throw std::invalid_argument("Hyperparams: tau must be >= 0");
    if (!(eps >= 0.0 && eps <= 1.0))
      throw std::invalid_argument("Hyperparams: eps must be in [0, 1]");
    if (!(eta > 0.0)) throw std::invalid_argument("Hyperparams: eta must be > 0");
    if (!(sigma2 > 0.0))
      throw std::invalid_argument("Hyperparams: sigma2 must be > 0");
    if (!(c >= 0.0) || !(d >= 0.0))
      throw std::invalid_argument("Hyperparams: c, d must be >= 0");
  }
};

}  // namespace gstg
