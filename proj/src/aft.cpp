#include "lcd/aft.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lcd/errors.hpp"
#include "lcd/optimize.hpp"
#include "lcd/special.hpp"

namespace lcd {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kLogLog2 = -0.36651292058166432701;  // log(log 2), Gumbel-min median

double law_median_w(AftLaw law) {
    switch (law) {
        case AftLaw::Weibull: return kLogLog2;
        case AftLaw::Lognormal: return 0.0;
        case AftLaw::Loglogistic: return 0.0;
    }
    return 0.0;
}

// log f_W(z) and d/dz, log S_W(z) and d/dz for the three error laws
struct LawTerms {
    double log_f, dlog_f, log_s, dlog_s;
};

LawTerms law_terms(AftLaw law, double z) {
    LawTerms t{};
    switch (law) {
        case AftLaw::Weibull: {  // standard minimum extreme value
            double ez = std::exp(z);
            t.log_f = z - ez;
            t.dlog_f = 1.0 - ez;
            t.log_s = -ez;
            t.dlog_s = -ez;
            break;
        }
        case AftLaw::Lognormal: {
            t.log_f = -0.5 * z * z - kLogSqrt2Pi;
            t.dlog_f = -z;
            t.log_s = special::norm_log_cdf(-z);
            t.dlog_s = -special::norm_hazard(z);
            break;
        }
        case AftLaw::Loglogistic: {
            double w = z > 30.0 ? 1.0 : std::exp(z) / (1.0 + std::exp(z));
            double log1pez = z > 30.0 ? z : std::log1p(std::exp(z));
            t.log_f = z - 2.0 * log1pez;
            t.dlog_f = 1.0 - 2.0 * w;
            t.log_s = -log1pez;
            t.dlog_s = -w;
            break;
        }
    }
    return t;
}

double law_survival_z(AftLaw law, double z) {
    return std::exp(law_terms(law, z).log_s);
}

// residual sd of W for each law, used for the scale start
double law_sd_w(AftLaw law) {
    switch (law) {
        case AftLaw::Weibull: return M_PI / std::sqrt(6.0);
        case AftLaw::Lognormal: return 1.0;
        case AftLaw::Loglogistic: return M_PI / std::sqrt(3.0);
    }
    return 1.0;
}

std::size_t covariate_index(const AftFit& fit, const std::string& name) {
    for (std::size_t i = 0; i < fit.covariate_names.size(); ++i) {
        if (fit.covariate_names[i] == name) return i;
    }
    std::string avail;
    for (const auto& n : fit.covariate_names) avail += (avail.empty() ? "" : ", ") + n;
    throw UnknownCovariate("unknown covariate '" + name + "' (available: " + avail + ")");
}
}  // namespace

std::string aft_law_name(AftLaw law) {
    switch (law) {
        case AftLaw::Weibull: return "weibull";
        case AftLaw::Lognormal: return "lognormal";
        case AftLaw::Loglogistic: return "loglogistic";
    }
    return "unknown";
}

AftLaw aft_law_from_name(const std::string& name) {
    if (name == "weibull") return AftLaw::Weibull;
    if (name == "lognormal") return AftLaw::Lognormal;
    if (name == "loglogistic") return AftLaw::Loglogistic;
    throw ConfigError("unknown AFT law: " + name);
}

void RegressionData::validate() const {
    if (durations.size() != observed.size() || durations.size() != covariates.size()) {
        throw DataError("regression data: row count mismatch");
    }
    for (double t : durations) {
        if (!(t > 0.0)) throw DomainError("regression data: nonpositive duration");
    }
    const std::size_t m = covariate_names.size();
    for (const auto& row : covariates) {
        if (row.size() != m) throw DataError("regression data: covariate row width mismatch");
        for (double v : row) {
            if (!std::isfinite(v)) throw DataError("regression data: non-finite covariate");
        }
    }
    // zero-variance columns are unusable regressors
    for (std::size_t j = 0; j < m; ++j) {
        double lo = covariates.empty() ? 0.0 : covariates[0][j], hi = lo;
        for (const auto& row : covariates) {
            lo = std::min(lo, row[j]);
            hi = std::max(hi, row[j]);
        }
        if (hi - lo <= 0.0) {
            throw CollinearCovariates("covariate '" + covariate_names[j] + "' has zero variance");
        }
    }
}

double aft_log_likelihood_grad(const RegressionData& data, AftLaw law,
                               const std::vector<double>& theta, std::vector<double>& grad) {
    const std::size_t m = data.n_covariates();
    const double alpha = theta.at(0);
    const double sigma = std::exp(theta.at(m + 1));
    grad.assign(m + 2, 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        const double logt = std::log(data.durations[i]);
        double lp = alpha;
        for (std::size_t j = 0; j < m; ++j) lp += theta[j + 1] * data.covariates[i][j];
        const double z = (logt - lp) / sigma;
        LawTerms lt = law_terms(law, z);
        if (data.observed[i]) {
            ll += lt.log_f - std::log(sigma) - logt;
            double dz = lt.dlog_f;
            grad[0] += dz * (-1.0 / sigma);
            for (std::size_t j = 0; j < m; ++j)
                grad[j + 1] += dz * (-data.covariates[i][j] / sigma);
            grad[m + 1] += dz * (-z) - 1.0;
        } else {
            ll += lt.log_s;
            double dz = lt.dlog_s;
            grad[0] += dz * (-1.0 / sigma);
            for (std::size_t j = 0; j < m; ++j)
                grad[j + 1] += dz * (-data.covariates[i][j] / sigma);
            grad[m + 1] += dz * (-z);
        }
    }
    return ll;
}

RegressionData regression_data_from_events(const std::vector<LaneChangeEvent>& events,
                                           const std::vector<std::string>& covariates,
                                           std::optional<VehicleClass> class_filter,
                                           std::size_t* dropped_rows) {
    RegressionData data;
    data.covariate_names = covariates;
    std::size_t dropped = 0;
    for (const auto& ev : events) {
        if (class_filter && ev.vehicle_class != *class_filter) continue;
        std::vector<double> row;
        row.reserve(covariates.size());
        bool complete = true;
        for (const auto& name : covariates) {
            if (name == "speed") {
                row.push_back(ev.speed_at_start);
            } else if (name == "thw") {
                if (!ev.time_headway_at_start) {
                    complete = false;
                    break;
                }
                row.push_back(*ev.time_headway_at_start);
            } else if (name == "dhw") {
                if (!ev.distance_headway_at_start) {
                    complete = false;
                    break;
                }
                row.push_back(*ev.distance_headway_at_start);
            } else {
                throw UnknownCovariate("unknown covariate '" + name +
                                       "'; available: speed, thw, dhw");
            }
        }
        if (!complete) {
            ++dropped;
            continue;
        }
        data.durations.push_back(ev.duration);
        data.observed.push_back(1);
        data.covariates.push_back(std::move(row));
    }
    if (dropped_rows) *dropped_rows = dropped;
    return data;
}

AftFit fit_aft(const RegressionData& data, AftLaw law, const FitOptions& options) {
    data.validate();
    const std::size_t n = data.n_rows();
    const std::size_t m = data.n_covariates();
    const std::size_t n_params = m + 2;  // alpha, beta, sigma
    if (n <= n_params + 2) throw DegenerateSample("fit_aft: too few rows");

    // design checks + OLS start on log t
    Eigen::MatrixXd x(n, m + 1);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (std::size_t j = 0; j < m; ++j) x(i, j + 1) = data.covariates[i][j];
        y(i) = std::log(data.durations[i]);
    }
    if (m > 0) {
        Eigen::MatrixXd xc = x.rightCols(m);
        Eigen::RowVectorXd means = xc.colwise().mean();
        xc.rowwise() -= means;
        Eigen::MatrixXd gram = xc.transpose() * xc;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
        double cond = svd.singularValues()(0) /
                      std::max(svd.singularValues()(svd.singularValues().size() - 1), 1e-300);
        if (cond > 1e10) throw CollinearCovariates("covariate cross-product is ill-conditioned");
    }
    Eigen::VectorXd ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    double resid_sd = std::sqrt(std::max((y - x * ols).squaredNorm() / static_cast<double>(n),
                                         1e-6));

    std::vector<double> theta0(m + 2);
    theta0[0] = ols(0);
    for (std::size_t j = 0; j < m; ++j) theta0[j + 1] = ols(j + 1);
    theta0[m + 1] = std::log(resid_sd / law_sd_w(law));

    GradObjective neg_ll = [&](const std::vector<double>& theta, std::vector<double>& grad) {
        double ll = aft_log_likelihood_grad(data, law, theta, grad);
        for (double& g : grad) g = -g;
        return -ll;
    };

    OptimOptions opt;
    opt.max_iterations = options.max_iterations;
    opt.grad_tol = options.grad_tol;
    opt.rel_f_tol = options.rel_f_tol;

    OptimResult best;
    bool have_best = false;
    for (int r = 0; r <= options.restarts; ++r) {
        std::vector<double> start = theta0;
        if (r > 0) {
            start[0] += (r % 2 == 0 ? 1.0 : -1.0) * 0.1 * r;
            start[m + 1] += (r % 2 == 0 ? -1.0 : 1.0) * 0.1 * r;
        }
        OptimResult res = minimize_bfgs(neg_ll, start, opt);
        if (!have_best || (res.converged && !best.converged) ||
            (res.converged == best.converged && res.fval < best.fval)) {
            best = res;
            have_best = true;
        }
    }

    AftFit fit;
    fit.error_law = law;
    fit.covariate_names = data.covariate_names;
    fit.intercept = best.x[0];
    fit.beta.assign(best.x.begin() + 1, best.x.begin() + 1 + static_cast<long>(m));
    fit.scale = std::exp(best.x[m + 1]);
    fit.loglik = -best.fval;
    fit.aic = 2.0 * static_cast<double>(n_params) - 2.0 * fit.loglik;
    fit.converged = best.converged;
    fit.iterations = best.iterations;

    auto hess = fd_hessian_of_gradient(neg_ll, best.x);
    Eigen::MatrixXd h(m + 2, m + 2);
    for (std::size_t i = 0; i < m + 2; ++i)
        for (std::size_t j = 0; j < m + 2; ++j) h(i, j) = hess[i][j];
    Eigen::MatrixXd cov = h.fullPivLu().inverse();
    fit.covariance.assign(m + 2, std::vector<double>(m + 2));
    for (std::size_t i = 0; i < m + 2; ++i)
        for (std::size_t j = 0; j < m + 2; ++j) fit.covariance[i][j] = cov(i, j);

    fit.covariate_means.resize(m);
    fit.covariate_min.resize(m);
    fit.covariate_max.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0, lo = data.covariates[0][j], hi = lo;
        for (std::size_t i = 0; i < n; ++i) {
            s += data.covariates[i][j];
            lo = std::min(lo, data.covariates[i][j]);
            hi = std::max(hi, data.covariates[i][j]);
        }
        fit.covariate_means[j] = s / static_cast<double>(n);
        fit.covariate_min[j] = lo;
        fit.covariate_max[j] = hi;
    }

    for (std::size_t j = 0; j < m; ++j) {
        CoefficientInfo ci;
        ci.name = data.covariate_names[j];
        ci.coef = fit.beta[j];
        ci.se = std::sqrt(std::max(0.0, fit.covariance[j + 1][j + 1]));
        ci.z = ci.se > 0.0 ? ci.coef / ci.se : 0.0;
        ci.p_two_sided = 2.0 * special::norm_cdf(-std::fabs(ci.z));
        ci.exp_coef = std::exp(ci.coef);
        fit.inference.push_back(ci);
    }

    fit.mst_at_means = std::exp(fit.linear_predictor(fit.covariate_means) +
                                fit.scale * law_median_w(law));
    return fit;
}

double AftFit::linear_predictor(const std::vector<double>& x) const {
    if (x.size() != beta.size()) throw DomainError("covariate vector dimension mismatch");
    double lp = intercept;
    for (std::size_t j = 0; j < beta.size(); ++j) lp += beta[j] * x[j];
    return lp;
}

double acceleration_factor(const AftFit& fit, const std::string& covariate, double delta) {
    std::size_t j = covariate_index(fit, covariate);
    return std::exp(delta * fit.beta[j]);
}

std::vector<CurveRow> predict_survival(const AftFit& fit, const std::vector<double>& x,
                                       const std::vector<double>& t_grid) {
    double lp = fit.linear_predictor(x);
    std::vector<CurveRow> rows;
    rows.reserve(t_grid.size());
    for (double t : t_grid) {
        if (t < 0.0) throw DomainError("predict_survival: negative t");
        CurveRow r;
        r.t = t;
        if (t == 0.0) {
            r.survival = 1.0;
            r.cum_hazard = 0.0;
        } else {
            double z = (std::log(t) - lp) / fit.scale;
            r.survival = law_survival_z(fit.error_law, z);
            r.cum_hazard = -law_terms(fit.error_law, z).log_s;
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<PartialEffectCurve> partial_effects(const AftFit& fit, const std::string& covariate,
                                                const std::vector<double>& values,
                                                const std::vector<double>& t_grid) {
    std::size_t j = covariate_index(fit, covariate);
    std::vector<PartialEffectCurve> out;
    PartialEffectCurve baseline;
    baseline.covariate_value = fit.covariate_means[j];
    baseline.baseline = true;
    baseline.curve = predict_survival(fit, fit.covariate_means, t_grid);
    out.push_back(std::move(baseline));
    for (double v : values) {
        PartialEffectCurve c;
        c.covariate_value = v;
        c.extrapolated = v < fit.covariate_min[j] || v > fit.covariate_max[j];
        std::vector<double> x = fit.covariate_means;
        x[j] = v;
        c.curve = predict_survival(fit, x, t_grid);
        out.push_back(std::move(c));
    }
    return out;
}

RegressionReport regression_report(const RegressionData& data, const std::vector<AftLaw>& laws,
                                   const FitOptions& options) {
    if (laws.empty()) throw ConfigError("regression_report: no laws requested");
    RegressionReport report;
    double best_aic = 0.0;
    for (AftLaw law : laws) {
        RegressionReportRow row;
        row.law = law;
        try {
            AftFit fit = fit_aft(data, law, options);
            if (!fit.converged) row.note = "not converged";
            if (row.note.empty() &&
                (!report.best_by_aic || fit.aic < best_aic)) {
                report.best_by_aic = law;
                best_aic = fit.aic;
            }
            row.fit = std::move(fit);
        } catch (const std::exception& e) {
            row.note = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string regression_report_to_csv(const RegressionReport& report) {
    std::ostringstream os;
    os << "law,aic,mst,covariate,coef,exp_coef,se,z,p\n";
    os.precision(10);
    for (const auto& row : report.rows) {
        if (!row.fit) {
            os << aft_law_name(row.law) << ",,,,,,,," << "\n";
            continue;
        }
        for (const auto& ci : row.fit->inference) {
            os << aft_law_name(row.law) << "," << row.fit->aic << "," << row.fit->mst_at_means
               << "," << ci.name << "," << ci.coef << "," << ci.exp_coef << "," << ci.se << ","
               << ci.z << "," << ci.p_two_sided << "\n";
        }
    }
    return os.str();
}

std::string regression_report_to_json(const RegressionReport& report) {
    nlohmann::json j;
    j["laws"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["law"] = aft_law_name(row.law);
        if (row.fit) {
            r["aic"] = row.fit->aic;
            r["loglik"] = row.fit->loglik;
            r["mst_at_means"] = row.fit->mst_at_means;
            r["intercept"] = row.fit->intercept;
            r["scale"] = row.fit->scale;
            r["converged"] = row.fit->converged;
            r["coefficients"] = nlohmann::json::array();
            for (const auto& ci : row.fit->inference) {
                r["coefficients"].push_back({{"name", ci.name},
                                             {"coef", ci.coef},
                                             {"exp_coef", ci.exp_coef},
                                             {"se", ci.se},
                                             {"z", ci.z},
                                             {"p", ci.p_two_sided}});
            }
        }
        if (!row.note.empty()) r["note"] = row.note;
        j["laws"].push_back(r);
    }
    if (report.best_by_aic) j["best_by_aic"] = aft_law_name(*report.best_by_aic);
    return j.dump(2);
}

std::string partial_effects_to_csv(const std::vector<PartialEffectCurve>& curves) {
    std::ostringstream os;
    os << "covariate_value,t,survival\n";
    os.precision(12);
    for (const auto& c : curves) {
        for (const auto& r : c.curve) {
            os << c.covariate_value << "," << r.t << "," << r.survival << "\n";
        }
    }
    return os.str();
}

}  // namespace lcd
