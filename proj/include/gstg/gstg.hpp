#pragma once

// Umbrella header for the whole library.

#include "gstg/cubic.hpp"
#include "gstg/em.hpp"
#include "gstg/errors.hpp"
#include "gstg/greedy.hpp"
#include "gstg/hyperparams.hpp"
#include "gstg/incomplete_gamma.hpp"
#include "gstg/metrics.hpp"
#include "gstg/model.hpp"
#include "gstg/omp.hpp"
#include "gstg/prior.hpp"
#include "gstg/problem.hpp"
#include "gstg/quadrature.hpp"
#include "gstg/recovery.hpp"
#include "gstg/rng.hpp"
#include "gstg/sweep.hpp"
