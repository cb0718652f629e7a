#pragma once

// Umbrella header for the npmix library: approximate nonparametric
// maximum-likelihood mixing distributions on fixed grids, with empirical
// Bayes, classification, and state-space applications on top.

#include <npmix/baseball.hpp>
#include <npmix/classifier.hpp>
#include <npmix/config.hpp>
#include <npmix/core.hpp>
#include <npmix/glucose.hpp>
#include <npmix/io.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>
#include <npmix/metrics.hpp>
#include <npmix/posterior.hpp>
#include <npmix/simulation.hpp>
#include <npmix/solvers.hpp>

namespace npmix {

inline constexpr const char* version = "0.1.0";

}  // namespace npmix
