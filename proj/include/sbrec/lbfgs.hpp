#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sbrec {

struct LbfgsOptions {
    int memory = 10;                  // curvature-pair history length
    int max_iterations = 500;
    double gradient_tolerance = 1e-6; // stop on gradient infinity norm
    int max_line_search_steps = 50;
};

struct LbfgsResult {
    std::vector<double> x;
    double objective = 0.0;
    double gradient_inf_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // objective after each accepted step
};

// f writes the gradient into `grad` and returns the objective value.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;

// Limited-memory BFGS with a strong-Wolfe line search. Deterministic: same
// inputs give bitwise-identical iterates.
LbfgsResult lbfgs_minimize(const ObjectiveFn& f, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace sbrec
