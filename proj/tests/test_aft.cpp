#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lcd/aft.hpp"
#include "lcd/errors.hpp"
#include "lcd/fitting.hpp"
#include "lcd/optimize.hpp"
#include "lcd/rng.hpp"
#include "lcd/survival.hpp"

using namespace lcd;

namespace {

// T = exp(a + b1 x1 + b2 x2 + s W), W standard logistic
RegressionData logistic_aft_data(std::size_t n, std::uint64_t seed, double a = 1.6,
                                 double b1 = 0.15, double b2 = -0.01, double s = 0.1) {
    Rng rng(seed);
    RegressionData d;
    d.covariate_names = {"x1", "x2"};
    for (std::size_t i = 0; i < n; ++i) {
        double x1 = 1.0 + 2.0 * rng.uniform();
        double x2 = 20.0 + 10.0 * rng.uniform();
        double u = rng.uniform();
        double w = std::log(u / (1.0 - u));
        d.durations.push_back(std::exp(a + b1 * x1 + b2 * x2 + s * w));
        d.observed.push_back(1);
        d.covariates.push_back({x1, x2});
    }
    return d;
}

RegressionData no_covariates(const Sample& s) {
    RegressionData d;
    d.durations = s.durations;
    d.observed = s.observed;
    for (std::size_t i = 0; i < s.size(); ++i) d.covariates.push_back({});
    return d;
}

}  // namespace

TEST_CASE("analytic gradient matches finite differences for every law") {
    RegressionData d = logistic_aft_data(40, 7);
    std::vector<std::vector<double>> points = {
        {1.2, 0.1, -0.02, std::log(0.2)},
        {2.0, -0.3, 0.05, std::log(1.3)},
        {0.5, 0.0, 0.0, 0.0},
    };
    // censor a few rows so both branches are exercised
    d.observed[3] = 0;
    d.observed[17] = 0;
    for (AftLaw law : {AftLaw::Weibull, AftLaw::Lognormal, AftLaw::Loglogistic}) {
        for (const auto& theta : points) {
            std::vector<double> grad;
            aft_log_likelihood_grad(d, law, theta, grad);
            auto fd = fd_gradient(
                [&](const std::vector<double>& th) {
                    std::vector<double> g;
                    return aft_log_likelihood_grad(d, law, th, g);
                },
                theta);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                INFO("law ", aft_law_name(law), " component ", i);
                double scale = std::max(1.0, std::fabs(fd[i]));
                CHECK(std::fabs(grad[i] - fd[i]) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("coefficient recovery on synthetic logistic-error data") {
    RegressionData d = logistic_aft_data(8000, 11);
    AftFit fit = fit_aft(d, AftLaw::Loglogistic);
    CHECK(fit.converged);
    REQUIRE(fit.beta.size() == 2);
    REQUIRE(fit.inference.size() == 2);
    CHECK(std::fabs(fit.beta[0] - 0.15) < 3.0 * fit.inference[0].se);
    CHECK(std::fabs(fit.beta[1] - (-0.01)) < 3.0 * fit.inference[1].se);
    CHECK(std::fabs(fit.intercept - 1.6) <
          3.0 * std::sqrt(std::max(0.0, fit.covariance[0][0])));
    // x1 truly matters at this sample size, so its Wald test must fire
    CHECK(fit.inference[0].p_two_sided < 0.05);
    for (const auto& ci : fit.inference) {
        CHECK(ci.exp_coef == std::exp(ci.coef));  // exact identity
        CHECK(ci.p_two_sided >= 0.0);  // huge z underflows the tail to exactly 0
        CHECK(ci.p_two_sided <= 1.0);
    }
    CHECK(fit.aic == doctest::Approx(2.0 * 4 - 2.0 * fit.loglik).epsilon(1e-9));
}

TEST_CASE("zero-covariate AFT fits match the univariate families") {
    struct Pair {
        AftLaw law;
        Family family;
    };
    Sample s = sample_durations(DistributionParams::weibull(2.0, 0.2), 3000, 17);
    for (Pair pr : {Pair{AftLaw::Weibull, Family::Weibull},
                    Pair{AftLaw::Lognormal, Family::Lognormal},
                    Pair{AftLaw::Loglogistic, Family::Loglogistic}}) {
        AftFit aft = fit_aft(no_covariates(s), pr.law);
        FitResult uni = fit_mle(pr.family, s);
        CHECK(aft.converged);
        CHECK(aft.loglik == doctest::Approx(uni.loglik).epsilon(1e-6));
        // parameter mapping: log T = alpha + sigma W
        switch (pr.law) {
            case AftLaw::Weibull:
            case AftLaw::Loglogistic:
                CHECK(aft.scale == doctest::Approx(1.0 / uni.params.shape_p).epsilon(1e-5));
                CHECK(std::exp(-aft.intercept) ==
                      doctest::Approx(uni.params.rate).epsilon(1e-5));
                break;
            case AftLaw::Lognormal:
                CHECK(aft.intercept == doctest::Approx(uni.params.mu).epsilon(1e-5));
                CHECK(aft.scale == doctest::Approx(uni.params.sigma).epsilon(1e-5));
                break;
        }
        CHECK(aft.mst_at_means == doctest::Approx(uni.mst).epsilon(1e-4));
    }
}

TEST_CASE("pure-noise covariate leaves the univariate fit intact") {
    Sample s = sample_durations(DistributionParams::loglogistic(3.5, 0.18), 4000, 23);
    RegressionData d = no_covariates(s);
    d.covariate_names = {"noise"};
    Rng rng(99);
    for (auto& row : d.covariates) row.push_back(rng.normal());
    AftFit fit = fit_aft(d, AftLaw::Loglogistic);
    FitResult uni = fit_mle(Family::Loglogistic, s);
    CHECK(fit.converged);
    CHECK(std::fabs(fit.beta[0]) < 3.0 * fit.inference[0].se);
    CHECK(std::fabs(fit.scale - 1.0 / uni.params.shape_p) <
          3.0 * std::sqrt(std::max(0.0, fit.covariance[2][2])) / uni.params.shape_p +
              1e-3);
}

TEST_CASE("time-rescaling identity") {
    RegressionData d = logistic_aft_data(600, 31);
    AftFit fit = fit_aft(d, AftLaw::Loglogistic);
    std::vector<double> x0 = fit.covariate_means;
    std::vector<double> x1 = {x0[0] + 0.7, x0[1] - 3.0};
    std::vector<double> grid = {0.5, 1.0, 2.0, 5.0, 9.0};
    auto curve_x1 = predict_survival(fit, x1, grid);
    double shift = std::exp((x0[0] - x1[0]) * fit.beta[0] + (x0[1] - x1[1]) * fit.beta[1]);
    std::vector<double> rescaled;
    for (double t : grid) rescaled.push_back(t * shift);
    auto curve_x0 = predict_survival(fit, x0, rescaled);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(curve_x1[i].survival == doctest::Approx(curve_x0[i].survival).epsilon(1e-10));
    }
}

TEST_CASE("covariate-shift equivariance") {
    RegressionData d = logistic_aft_data(2000, 37);
    AftFit a = fit_aft(d, AftLaw::Lognormal);
    const double c = 4.2;
    RegressionData shifted = d;
    for (auto& row : shifted.covariates) row[0] += c;
    AftFit b = fit_aft(shifted, AftLaw::Lognormal);
    CHECK(b.beta[0] == doctest::Approx(a.beta[0]).epsilon(1e-6));
    CHECK(b.beta[1] == doctest::Approx(a.beta[1]).epsilon(1e-6));
    CHECK(b.scale == doctest::Approx(a.scale).epsilon(1e-6));
    CHECK(b.intercept == doctest::Approx(a.intercept - c * a.beta[0]).epsilon(1e-6));
    CHECK(b.inference[0].p_two_sided ==
          doctest::Approx(a.inference[0].p_two_sided).epsilon(1e-4));
}

TEST_CASE("acceleration factors") {
    AftFit fit;
    fit.covariate_names = {"thw", "speed"};
    fit.beta = {0.160, -0.016};
    CHECK(acceleration_factor(fit, "thw", 1.0) == doctest::Approx(1.174).epsilon(5e-4));
    CHECK(acceleration_factor(fit, "speed", 1.0) == doctest::Approx(0.984).epsilon(5e-4));
    CHECK(acceleration_factor(fit, "thw", 0.0) == 1.0);
    CHECK_THROWS_AS(acceleration_factor(fit, "dhw", 1.0), UnknownCovariate);
}

TEST_CASE("predicted curves behave like an AFT model") {
    RegressionData d = logistic_aft_data(1500, 41);
    AftFit fit = fit_aft(d, AftLaw::Loglogistic);

    // median of the baseline curve is mst_at_means
    auto at_median = predict_survival(fit, fit.covariate_means, {fit.mst_at_means});
    CHECK(at_median[0].survival == doctest::Approx(0.5).epsilon(1e-9));

    // beta_1 > 0: raising x1 stretches time, so survival rises pointwise
    CHECK(fit.beta[0] > 0.0);
    std::vector<double> hi = fit.covariate_means;
    hi[0] += 1.0;
    std::vector<double> grid = {1.0, 3.0, 6.0, 12.0};
    auto base = predict_survival(fit, fit.covariate_means, grid);
    auto up = predict_survival(fit, hi, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(up[i].survival >= base[i].survival);
    }
    CHECK(base[0].cum_hazard == doctest::Approx(-std::log(base[0].survival)).epsilon(1e-9));

    auto zero = predict_survival(fit, fit.covariate_means, {0.0});
    CHECK(zero[0].survival == 1.0);
    CHECK(zero[0].cum_hazard == 0.0);
    CHECK_THROWS_AS(predict_survival(fit, fit.covariate_means, {-1.0}), DomainError);
    CHECK_THROWS_AS(predict_survival(fit, {1.0}, {1.0}), DomainError);
}

TEST_CASE("partial effect curves") {
    RegressionData d = logistic_aft_data(1500, 43);
    AftFit fit = fit_aft(d, AftLaw::Loglogistic);
    std::vector<double> grid = {1.0, 2.0, 4.0, 8.0};

    auto curves = partial_effects(fit, "x1", {1.2, 2.8}, grid);
    REQUIRE(curves.size() == 3);
    CHECK(curves[0].baseline);
    CHECK_FALSE(curves[1].baseline);
    // beta_1 > 0: larger x1 means pointwise higher survival
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(curves[2].curve[i].survival >= curves[1].curve[i].survival);
    }
    // the baseline value reproduces the baseline curve
    auto same = partial_effects(fit, "x1", {fit.covariate_means[0]}, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(same[1].curve[i].survival ==
              doctest::Approx(same[0].curve[i].survival).epsilon(1e-12));
    }
    CHECK_FALSE(same[1].extrapolated);
    auto extra = partial_effects(fit, "x1", {99.0}, grid);
    CHECK(extra[1].extrapolated);
    CHECK_THROWS_AS(partial_effects(fit, "nope", {1.0}, grid), UnknownCovariate);

    std::string csv = partial_effects_to_csv(curves);
    CHECK(csv.rfind("covariate_value,t,survival", 0) == 0);
}

TEST_CASE("error paths") {
    RegressionData d = logistic_aft_data(50, 3);
    RegressionData degenerate = d;
    degenerate.durations.resize(4);
    degenerate.observed.resize(4);
    degenerate.covariates.resize(4);
    CHECK_THROWS_AS(fit_aft(degenerate, AftLaw::Weibull), DegenerateSample);

    RegressionData flat = d;
    for (auto& row : flat.covariates) row[1] = 5.0;
    CHECK_THROWS_AS(fit_aft(flat, AftLaw::Weibull), CollinearCovariates);

    RegressionData dup = d;
    dup.covariate_names.push_back("x1_again");
    for (auto& row : dup.covariates) row.push_back(row[0]);
    CHECK_THROWS_AS(fit_aft(dup, AftLaw::Weibull), CollinearCovariates);

    RegressionData bad = d;
    bad.durations[0] = 0.0;
    CHECK_THROWS_AS(fit_aft(bad, AftLaw::Weibull), DomainError);
}

TEST_CASE("report ranks the generating law best by AIC across seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RegressionData d = logistic_aft_data(3000, seed);
        RegressionReport report = regression_report(
            d, {AftLaw::Weibull, AftLaw::Lognormal, AftLaw::Loglogistic});
        REQUIRE(report.rows.size() == 3);
        REQUIRE(report.best_by_aic.has_value());
        INFO("seed ", seed);
        CHECK(*report.best_by_aic == AftLaw::Loglogistic);
    }
    RegressionData d = logistic_aft_data(3000, 1);
    RegressionReport report =
        regression_report(d, {AftLaw::Weibull, AftLaw::Lognormal, AftLaw::Loglogistic});
    std::string csv = regression_report_to_csv(report);
    CHECK(csv.rfind("law,aic,mst,covariate", 0) == 0);
    std::string json = regression_report_to_json(report);
    CHECK(json.find("\"best_by_aic\": \"loglogistic\"") != std::string::npos);
    CHECK_THROWS_AS(regression_report(d, {}), ConfigError);
}
