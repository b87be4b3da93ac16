#pragma once

#include <functional>

#include "mfgp/types.hpp"

namespace mfgp {

struct LbfgsOptions {
    int max_iterations = 200;
    int history = 8;
    /// Stop when the infinity norm of the gradient drops below this.
    double gradient_tolerance = 1e-6;
    /// Stop when the relative decrease of the objective over one iteration drops below this.
    double relative_tolerance = 1e-11;
    int max_line_search_steps = 30;
};

struct LbfgsResult {
    Vector x;
    double value = 0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Objective for minimization. Writes the gradient into `grad` (pre-sized) and returns the value.
/// A non-finite return marks the point infeasible; the line search then backs off.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory BFGS with a strong-Wolfe line search. The objective value never increases
/// across accepted iterates.
LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options = {});

} // namespace mfgp
