#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcd/survival.hpp"

namespace lcd {

struct FitOptions {
    int max_iterations = 500;
    double grad_tol = 1e-8;
    double rel_f_tol = 1e-12;
    int restarts = 3;  // perturbed re-initializations beyond the base start
};

struct FitResult {
    DistributionParams params;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    double mst = 0.0;
    std::size_t n = 0;
    int n_params = 0;
    // covariance of the unconstrained parameterization
    std::vector<std::vector<double>> covariance;
    bool converged = false;
    int iterations = 0;

    // sqrt of covariance diagonal (unconstrained space)
    std::vector<double> std_errors() const;
};

// Maximum-likelihood fit over the unconstrained reparameterization with
// method-of-moments starts and perturbed restarts. Non-convergence is
// reported through converged=false, not an exception.
FitResult fit_mle(Family family, const Sample& sample, const FitOptions& options = {});

struct ComparisonRow {
    Family family = Family::Exponential;
    std::optional<FitResult> fit;
    std::string note;  // empty when the fit is usable
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;  // sorted by AIC, ties by BIC then n_params
    std::optional<Family> best_by_aic;
    std::optional<Family> best_by_bic;
};

ComparisonTable compare_models(const Sample& sample, const std::vector<Family>& families,
                               const FitOptions& options = {});

struct KaplanMeierCurve {
    std::vector<double> times;      // sorted unique event times
    std::vector<double> survival;   // estimate just after each event time
    std::vector<std::size_t> at_risk;

    // step-function evaluation; 1 before the first event time
    double evaluate(double t) const;
};

KaplanMeierCurve kaplan_meier(const Sample& sample);

struct CurveRow {
    double t = 0.0;
    double survival = 0.0;
    double cum_hazard = 0.0;
    std::optional<double> survival_diff;  // set by the pairwise overload
};

std::vector<CurveRow> emit_curves(const DistributionParams& params,
                                  const std::vector<double>& t_grid);
std::vector<CurveRow> emit_curves(const KaplanMeierCurve& km,
                                  const std::vector<double>& t_grid);
// pairwise: survival_diff = S_a(t) - S_b(t)
std::vector<CurveRow> emit_curves(const DistributionParams& a, const DistributionParams& b,
                                  const std::vector<double>& t_grid);

std::string curves_to_csv(const std::vector<CurveRow>& rows);
std::string comparison_to_csv(const ComparisonTable& table);
std::string comparison_to_json(const ComparisonTable& table);

}  // namespace lcd
