#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcd/extraction.hpp"
#include "lcd/fitting.hpp"
#include "lcd/survival.hpp"

namespace lcd {

enum class AftLaw { Weibull, Lognormal, Loglogistic };

std::string aft_law_name(AftLaw law);
AftLaw aft_law_from_name(const std::string& name);

struct RegressionData {
    std::vector<double> durations;
    std::vector<std::uint8_t> observed;
    std::vector<std::string> covariate_names;
    // row-major, covariates[row][col]
    std::vector<std::vector<double>> covariates;

    std::size_t n_rows() const { return durations.size(); }
    std::size_t n_covariates() const { return covariate_names.size(); }
    void validate() const;
};

struct CoefficientInfo {
    std::string name;
    double coef = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_two_sided = 0.0;
    double exp_coef = 0.0;
};

struct AftFit {
    AftLaw error_law = AftLaw::Weibull;
    double intercept = 0.0;
    std::vector<std::string> covariate_names;
    std::vector<double> beta;
    double scale = 1.0;  // sigma
    double loglik = 0.0;
    double aic = 0.0;
    std::vector<CoefficientInfo> inference;
    std::vector<double> covariate_means;
    std::vector<double> covariate_min;
    std::vector<double> covariate_max;
    double mst_at_means = 0.0;
    bool converged = false;
    int iterations = 0;
    // covariance over (intercept, beta..., log scale)
    std::vector<std::vector<double>> covariance;

    double linear_predictor(const std::vector<double>& x) const;
};

// Event rows become regression rows; rows lacking a requested optional
// covariate are dropped and counted. Covariate names: speed, thw, dhw.
RegressionData regression_data_from_events(const std::vector<LaneChangeEvent>& events,
                                           const std::vector<std::string>& covariates,
                                           std::optional<VehicleClass> class_filter = std::nullopt,
                                           std::size_t* dropped_rows = nullptr);

// MLE of log T = alpha + x'beta + sigma W over (alpha, beta, log sigma).
AftFit fit_aft(const RegressionData& data, AftLaw law, const FitOptions& options = {});

// exp(delta * beta_covariate), the multiplicative survival-time change.
double acceleration_factor(const AftFit& fit, const std::string& covariate, double delta);

std::vector<CurveRow> predict_survival(const AftFit& fit, const std::vector<double>& x,
                                       const std::vector<double>& t_grid);

struct PartialEffectCurve {
    double covariate_value = 0.0;
    bool baseline = false;
    bool extrapolated = false;  // value outside the observed covariate range
    std::vector<CurveRow> curve;
};

// One curve per value with all other covariates pinned at their means;
// the baseline (all means) curve is included first.
std::vector<PartialEffectCurve> partial_effects(const AftFit& fit, const std::string& covariate,
                                                const std::vector<double>& values,
                                                const std::vector<double>& t_grid);

struct RegressionReportRow {
    AftLaw law = AftLaw::Weibull;
    std::optional<AftFit> fit;
    std::string note;
};

struct RegressionReport {
    std::vector<RegressionReportRow> rows;
    std::optional<AftLaw> best_by_aic;
};

RegressionReport regression_report(const RegressionData& data, const std::vector<AftLaw>& laws,
                                   const FitOptions& options = {});

std::string regression_report_to_csv(const RegressionReport& report);
std::string regression_report_to_json(const RegressionReport& report);
std::string partial_effects_to_csv(const std::vector<PartialEffectCurve>& curves);

// AFT loglik + analytic gradient over theta = (alpha, beta..., log sigma),
// exposed for gradient verification tests.
double aft_log_likelihood_grad(const RegressionData& data, AftLaw law,
                               const std::vector<double>& theta, std::vector<double>& grad);

}  // namespace lcd
