#include "lcd/optimize.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace lcd {

namespace {
double max_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}
}  // namespace

OptimResult minimize_bfgs(const GradObjective& objective, std::vector<double> x0,
                          const OptimOptions& options) {
    const int n = static_cast<int>(x0.size());
    OptimResult result;
    result.x = x0;

    std::vector<double> grad(n), grad_new(n);
    double f = objective(result.x, grad);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;
        result.grad_max_norm = max_norm(grad);
        if (result.grad_max_norm < options.grad_tol) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grad.data(), n);
        Eigen::VectorXd dir = -(hinv * g);
        double slope = dir.dot(g);
        if (!(slope < 0.0)) {  // not a descent direction, reset
            hinv.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
        }

        // backtracking Armijo
        double step = 1.0;
        std::vector<double> x_new(n);
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (int i = 0; i < n; ++i) x_new[i] = result.x[i] + step * dir[i];
            f_new = objective(x_new, grad_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd s = step * dir;
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = grad_new[i] - grad[i];
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            double rho = 1.0 / sy;
            Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            hinv = (eye - rho * s * y.transpose()) * hinv *
                       (eye - rho * y * s.transpose()) +
                   rho * s * s.transpose();
        }

        double f_prev = f;
        for (int i = 0; i < n; ++i) result.x[i] = x_new[i];
        grad = grad_new;
        f = f_new;

        double rel_change = std::fabs(f_prev - f) / std::max(1.0, std::fabs(f));
        result.grad_max_norm = max_norm(grad);
        if (rel_change < options.rel_f_tol && result.grad_max_norm < options.grad_tol) {
            result.converged = true;
            break;
        }
    }
    // Newton polish: BFGS can stall in flat, strongly correlated valleys while the
    // gradient is still above tolerance. Damped Newton on the differentiated
    // gradient finishes the job quadratically.
    int stalls = 0;
    for (int polish = 0; options.newton_polish && polish < 80 &&
                         max_norm(grad) >= options.grad_tol;
         ++polish) {
        double g_before = max_norm(grad);
        auto hess = fd_hessian_of_gradient(objective, result.x);
        Eigen::MatrixXd h(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) h(i, j) = hess[i][j];
        Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grad.data(), n);
        Eigen::VectorXd dir = h.fullPivLu().solve(-g);
        if (!dir.allFinite()) break;
        double step = 1.0;
        bool accepted = false;
        std::vector<double> x_new(n);
        for (int ls = 0; ls < 30; ++ls) {
            for (int i = 0; i < n; ++i) x_new[i] = result.x[i] + step * dir[i];
            double f_new = objective(x_new, grad_new);
            if (std::isfinite(f_new) &&
                (f_new < f || max_norm(grad_new) < max_norm(grad))) {
                result.x = x_new;
                f = f_new;
                grad = grad_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        ++result.iterations;
        // quadratic basins crush the gradient per step; a slow crawl means a
        // ridge the polish cannot finish, so stop burning Hessians on it
        stalls = max_norm(grad) > 0.3 * g_before ? stalls + 1 : 0;
        if (stalls >= 3) break;
    }

    result.fval = f;
    result.grad_max_norm = max_norm(grad);
    if (result.grad_max_norm < options.grad_tol) result.converged = true;
    return result;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x, double step) {
    std::vector<double> g(x.size());
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double h = step * std::max(1.0, std::fabs(x[i]));
        xp[i] = x[i] + h;
        double fp = f(xp);
        xp[i] = x[i] - h;
        double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

std::vector<std::vector<double>> fd_hessian_of_gradient(const GradObjective& objective,
                                                        const std::vector<double>& x,
                                                        double step) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> hess(n, std::vector<double>(n, 0.0));
    std::vector<double> xp = x, gp(n), gm(n);
    for (std::size_t j = 0; j < n; ++j) {
        double h = step * std::max(1.0, std::fabs(x[j]));
        xp[j] = x[j] + h;
        objective(xp, gp);
        xp[j] = x[j] - h;
        objective(xp, gm);
        xp[j] = x[j];
        for (std::size_t i = 0; i < n; ++i) hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = hess[j][i] = s;
        }
    }
    return hess;
}

}  // namespace lcd
