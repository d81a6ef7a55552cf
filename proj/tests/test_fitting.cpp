#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lcd/errors.hpp"
#include "lcd/fitting.hpp"
#include "lcd/survival.hpp"

using namespace lcd;

namespace {
Sample observed(std::vector<double> t) {
    Sample s;
    s.observed.assign(t.size(), 1);
    s.durations = std::move(t);
    return s;
}
}  // namespace

TEST_CASE("exponential MLE matches the closed form") {
    FitResult fit = fit_mle(Family::Exponential, observed({1.0, 2.0, 3.0}));
    CHECK(fit.converged);
    CHECK(fit.params.rate == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(fit.mst == doctest::Approx(std::log(2.0) / fit.params.rate).epsilon(1e-10));
}

TEST_CASE("lognormal MLE matches the closed form") {
    Sample s = observed({1.5, 3.0, 4.5, 6.0, 2.2, 8.1, 5.5});
    double mean = 0.0;
    for (double t : s.durations) mean += std::log(t);
    mean /= s.durations.size();
    double ss = 0.0;
    for (double t : s.durations) ss += (std::log(t) - mean) * (std::log(t) - mean);
    double sd = std::sqrt(ss / s.durations.size());

    FitResult fit = fit_mle(Family::Lognormal, s);
    CHECK(fit.converged);
    CHECK(fit.params.mu == doctest::Approx(mean).epsilon(1e-8));
    CHECK(fit.params.sigma == doctest::Approx(sd).epsilon(1e-8));
}

TEST_CASE("parameter recovery within 3 standard errors for every family") {
    struct Case {
        DistributionParams truth;
        std::uint64_t seed;
    };
    std::vector<Case> cases = {
        {DistributionParams::exponential(0.4), 11},
        {DistributionParams::weibull(2.0, 0.2), 12},
        {DistributionParams::lognormal(1.7, 0.25), 13},
        {DistributionParams::loglogistic(3.5, 0.18), 14},
        {DistributionParams::gen_gamma(1.8, 1.4, 0.25), 15},
    };
    for (const auto& c : cases) {
        Sample s = sample_durations(c.truth, 10000, c.seed);
        FitResult fit = fit_mle(c.truth.family, s);
        CHECK(fit.converged);
        auto theta_true = to_unconstrained(c.truth);
        auto theta_hat = to_unconstrained(fit.params);
        auto se = fit.std_errors();
        for (std::size_t i = 0; i < theta_true.size(); ++i) {
            INFO("family ", family_name(c.truth.family), " param ", i);
            CHECK(std::fabs(theta_hat[i] - theta_true[i]) < 3.0 * se[i]);
        }
        // likelihood dominance at the optimum
        CHECK(fit.loglik >= log_likelihood(c.truth, s) - 1e-6);
    }
}

TEST_CASE("AIC and BIC identities") {
    Sample s = sample_durations(DistributionParams::weibull(2.0, 0.2), 500, 3);
    for (Family f : {Family::Exponential, Family::Weibull, Family::GenGamma}) {
        FitResult fit = fit_mle(f, s);
        CHECK(fit.aic == doctest::Approx(2.0 * fit.n_params - 2.0 * fit.loglik).epsilon(1e-9));
        CHECK(fit.bic ==
              doctest::Approx(fit.n_params * std::log(double(fit.n)) - 2.0 * fit.loglik)
                  .epsilon(1e-9));
        CHECK(fit.mst == doctest::Approx(quantile(fit.params, 0.5)).epsilon(1e-12));
    }
}

TEST_CASE("scale equivariance of the fits") {
    const double c = 3.7;
    Sample s = sample_durations(DistributionParams::weibull(1.8, 0.3), 2000, 21);
    Sample scaled = s;
    for (double& t : scaled.durations) t *= c;

    for (Family f : {Family::Exponential, Family::Weibull, Family::Loglogistic,
                     Family::GenGamma}) {
        FitResult a = fit_mle(f, s);
        FitResult b = fit_mle(f, scaled);
        CHECK(b.params.rate == doctest::Approx(a.params.rate / c).epsilon(1e-6));
        if (f != Family::Exponential) {
            CHECK(b.params.shape_p == doctest::Approx(a.params.shape_p).epsilon(1e-6));
        }
        if (f == Family::GenGamma) {
            CHECK(b.params.shape_k == doctest::Approx(a.params.shape_k).epsilon(1e-4));
        }
        CHECK(b.mst == doctest::Approx(a.mst * c).epsilon(1e-6));
    }
    FitResult a = fit_mle(Family::Lognormal, s);
    FitResult b = fit_mle(Family::Lognormal, scaled);
    CHECK(b.params.mu == doctest::Approx(a.params.mu + std::log(c)).epsilon(1e-6));
    CHECK(b.params.sigma == doctest::Approx(a.params.sigma).epsilon(1e-6));
}

TEST_CASE("gengamma on weibull data recovers k near one") {
    Sample s = sample_durations(DistributionParams::weibull(2.2, 0.25), 10000, 31);
    FitResult fit = fit_mle(Family::GenGamma, s);
    CHECK(fit.converged);
    auto se = fit.std_errors();
    CHECK(std::fabs(std::log(fit.params.shape_k)) < 3.0 * se[2]);
}

TEST_CASE("fit error paths") {
    CHECK_THROWS_AS(fit_mle(Family::GenGamma, observed({1.0, 2.0, 3.0})), DegenerateSample);
    CHECK_THROWS_AS(fit_mle(Family::Weibull, observed({2.0, 2.0, 2.0, 2.0})), NonIdentifiable);
    // exponential has no shape, all-equal data is fine
    FitResult fit = fit_mle(Family::Exponential, observed({2.0, 2.0, 2.0, 2.0}));
    CHECK(fit.params.rate == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("model comparison ranks families sensibly") {
    Sample s = sample_durations(DistributionParams::lognormal(1.7, 0.25), 5000, 42);
    std::vector<Family> all = {Family::Exponential, Family::Weibull, Family::Lognormal,
                               Family::Loglogistic, Family::GenGamma};
    ComparisonTable table = compare_models(s, all);
    REQUIRE(table.rows.size() == 5);
    CHECK(table.rows.back().family == Family::Exponential);
    bool top_two_has_lognormal = table.rows[0].family == Family::Lognormal ||
                                 table.rows[1].family == Family::Lognormal;
    CHECK(top_two_has_lognormal);
    // sorted by AIC
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        CHECK(table.rows[i - 1].fit->aic <= table.rows[i].fit->aic);
    }
    CHECK(table.best_by_aic.has_value());
    CHECK(*table.best_by_aic == table.rows[0].family);

    ComparisonTable single = compare_models(s, {Family::Weibull});
    CHECK(single.rows.size() == 1);
    CHECK(*single.best_by_aic == Family::Weibull);

    // a failing row must not abort the others
    Sample tiny = observed({1.0, 2.0, 3.0});
    ComparisonTable degraded = compare_models(tiny, {Family::GenGamma, Family::Exponential});
    CHECK(degraded.rows.size() == 2);
    CHECK(*degraded.best_by_aic == Family::Exponential);
}

TEST_CASE("kaplan-meier product limit") {
    KaplanMeierCurve km = kaplan_meier(observed({1.0, 2.0, 3.0}));
    REQUIRE(km.times.size() == 3);
    CHECK(km.survival[0] == doctest::Approx(2.0 / 3.0));
    CHECK(km.survival[1] == doctest::Approx(1.0 / 3.0));
    CHECK(km.survival[2] == doctest::Approx(0.0));
    CHECK(km.evaluate(0.5) == 1.0);
    CHECK(km.evaluate(2.5) == doctest::Approx(1.0 / 3.0));

    Sample all_censored;
    all_censored.durations = {1.0, 2.0};
    all_censored.observed = {0, 0};
    KaplanMeierCurve flat = kaplan_meier(all_censored);
    CHECK(flat.times.empty());
    CHECK(flat.evaluate(5.0) == 1.0);

    Sample mixed;
    mixed.durations = {1.0, 2.0, 3.0};
    mixed.observed = {1, 0, 1};
    KaplanMeierCurve pl = kaplan_meier(mixed);
    REQUIRE(pl.times.size() == 2);
    CHECK(pl.survival[0] == doctest::Approx(2.0 / 3.0));
    CHECK(pl.survival[1] == doctest::Approx(0.0));

    // no censoring: 1 - empirical CDF at event times
    Sample s = sample_durations(DistributionParams::weibull(2.0, 0.2), 200, 51);
    KaplanMeierCurve k2 = kaplan_meier(s);
    double n = static_cast<double>(s.size());
    for (std::size_t i = 0; i < k2.times.size(); ++i) {
        double below = 0.0;
        for (double t : s.durations) {
            if (t <= k2.times[i]) below += 1.0;
        }
        CHECK(k2.survival[i] == doctest::Approx(1.0 - below / n).epsilon(1e-12));
    }
}

TEST_CASE("curve emission") {
    auto rows = emit_curves(DistributionParams::exponential(0.5), {0.0, 2.0});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].survival == doctest::Approx(1.0));
    CHECK(rows[0].cum_hazard == doctest::Approx(0.0));
    CHECK(rows[1].survival == doctest::Approx(0.36788).epsilon(1e-4));
    CHECK(rows[1].cum_hazard == doctest::Approx(1.0).epsilon(1e-12));

    auto same = emit_curves(DistributionParams::exponential(0.5),
                            DistributionParams::exponential(0.5), {0.5, 1.0, 7.0});
    for (const auto& r : same) {
        REQUIRE(r.survival_diff.has_value());
        CHECK(*r.survival_diff == doctest::Approx(0.0));
    }

    KaplanMeierCurve km = kaplan_meier(observed({1.0, 2.0, 4.0}));
    auto kmrows = emit_curves(km, km.times);
    for (std::size_t i = 0; i < km.times.size(); ++i) {
        CHECK(kmrows[i].survival == km.survival[i]);
    }

    CHECK_THROWS_AS(emit_curves(DistributionParams::exponential(1.0), {2.0, 1.0}), DomainError);

    std::string csv = curves_to_csv(same);
    CHECK(csv.rfind("t,survival,cum_hazard,surv_diff", 0) == 0);
}
