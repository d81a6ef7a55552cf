#pragma once

#include <functional>
#include <vector>

namespace lcd {

// Objective: returns f(x) and fills grad with the gradient. Minimized.
using GradObjective =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct OptimOptions {
    int max_iterations = 500;
    double grad_tol = 1e-8;       // max-norm of gradient
    double rel_f_tol = 1e-12;     // relative change in f
    bool newton_polish = true;    // finish with damped Newton on the gradient
};

struct OptimResult {
    std::vector<double> x;
    double fval = 0.0;
    double grad_max_norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Quasi-Newton (BFGS, inverse-Hessian form) with backtracking line search.
OptimResult minimize_bfgs(const GradObjective& objective, std::vector<double> x0,
                          const OptimOptions& options = {});

// Central finite-difference gradient of a scalar function, used for
// gradient verification and Hessian assembly.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double step = 1e-6);

// Central finite differences of an analytic gradient: Hessian estimate,
// symmetrized.
std::vector<std::vector<double>> fd_hessian_of_gradient(const GradObjective& objective,
                                                        const std::vector<double>& x,
                                                        double step = 1e-5);

}  // namespace lcd
