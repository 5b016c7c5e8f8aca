#pragma once

#include "ecmbq/numeric.hpp"

#include <functional>

namespace ecmbq {

struct OptimResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const Vector&)>;
// Returns the value and writes the gradient.
using ObjectiveWithGradient = std::function<double(const Vector&, Vector&)>;

// Derivative-free simplex minimisation (GSL nmsimplex2). The returned point is never worse
// than x0.
OptimResult minimize_nelder_mead(const Objective& f, const Vector& x0, const Vector& step, int max_iters,
                                 double size_tol = 1e-10);

// Quasi-Newton minimisation (GSL vector_bfgs2).
OptimResult minimize_bfgs(const ObjectiveWithGradient& f, const Vector& x0, int max_iters,
                          double grad_tol = 1e-6, double initial_step = 0.1);

}  // namespace ecmbq
