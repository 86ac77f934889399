#ifndef CONDEX_CONDEX_HPP
#define CONDEX_CONDEX_HPP

// Umbrella header: kernel construction, operator assembly, regularized solve,
// the fitting pipeline, and the built-in experiments.

#include "condex/csv.hpp"
#include "condex/estimator.hpp"
#include "condex/experiments.hpp"
#include "condex/kernels.hpp"
#include "condex/linalg.hpp"
#include "condex/operators.hpp"
#include "condex/point.hpp"
#include "condex/rng.hpp"
#include "condex/solver.hpp"

#endif
