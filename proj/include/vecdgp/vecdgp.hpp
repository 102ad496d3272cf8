#ifndef VECDGP_VECDGP_HPP
#define VECDGP_VECDGP_HPP

// Umbrella header: Vecchia-approximated deep Gaussian process surrogates
// with fully-Bayesian MCMC inference, a dense oracle path, prediction, and
// a benchmark harness.

#include "vecdgp/bench.hpp"
#include "vecdgp/conditioning.hpp"
#include "vecdgp/data_io.hpp"
#include "vecdgp/dense_gp.hpp"
#include "vecdgp/design.hpp"
#include "vecdgp/errors.hpp"
#include "vecdgp/kernel.hpp"
#include "vecdgp/mcmc.hpp"
#include "vecdgp/metrics.hpp"
#include "vecdgp/model.hpp"
#include "vecdgp/predict.hpp"
#include "vecdgp/rng.hpp"
#include "vecdgp/sparse_factor.hpp"
#include "vecdgp/testfuns.hpp"
#include "vecdgp/trace_io.hpp"

#endif  // VECDGP_VECDGP_HPP
