#include "lcd/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lcd/errors.hpp"
#include "lcd/optimize.hpp"

namespace lcd {

namespace {
constexpr double kEulerGamma = 0.57721566490153286061;

struct LogMoments {
    double mean = 0.0;
    double sd = 0.0;
};

LogMoments log_moments(const Sample& sample) {
    std::vector<double> logs;
    logs.reserve(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (sample.observed[i]) logs.push_back(std::log(sample.durations[i]));
    }
    LogMoments m;
    double n = static_cast<double>(logs.size());
    m.mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : logs) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / n);
    return m;
}

// Method-of-moments starts in the unconstrained space.
std::vector<double> initial_theta(Family family, const Sample& sample) {
    double total = std::accumulate(sample.durations.begin(), sample.durations.end(), 0.0);
    double events = static_cast<double>(sample.n_events());
    double log_rate0 = std::log(events / total);
    LogMoments m = log_moments(sample);
    double sd = std::max(m.sd, 1e-3);
    switch (family) {
        case Family::Exponential:
            return {log_rate0};
        case Family::Weibull: {
            double p0 = (M_PI / std::sqrt(6.0)) / sd;
            return {-m.mean - kEulerGamma / p0, std::log(p0)};
        }
        case Family::Lognormal:
            return {m.mean, std::log(sd)};
        case Family::Loglogistic: {
            double p0 = (M_PI / std::sqrt(3.0)) / sd;
            return {-m.mean, std::log(p0)};
        }
        case Family::GenGamma: {
            double p0 = (M_PI / std::sqrt(6.0)) / sd;
            return {-m.mean - kEulerGamma / p0, std::log(p0), 0.0};  // k = 1
        }
    }
    return {};
}

std::vector<std::vector<double>> covariance_from_hessian(
    const GradObjective& neg_loglik, const std::vector<double>& theta) {
    auto hess = fd_hessian_of_gradient(neg_loglik, theta);
    const int n = static_cast<int>(theta.size());
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h(i, j) = hess[i][j];
    Eigen::MatrixXd cov = h.fullPivLu().inverse();
    std::vector<std::vector<double>> out(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i][j] = cov(i, j);
    return out;
}
}  // namespace

std::vector<double> FitResult::std_errors() const {
    std::vector<double> se;
    for (std::size_t i = 0; i < covariance.size(); ++i) {
        se.push_back(std::sqrt(std::max(0.0, covariance[i][i])));
    }
    return se;
}

FitResult fit_mle(Family family, const Sample& sample, const FitOptions& options) {
    sample.validate();
    DistributionParams probe;
    probe.family = family;
    const int n_params = probe.n_free_params();
    if (static_cast<long long>(sample.n_events()) < n_params + 1) {
        throw DegenerateSample("fit_mle: fewer observed events than parameters + 1");
    }
    if (n_params > 1) {
        LogMoments m = log_moments(sample);
        if (m.sd < 1e-12) {
            throw NonIdentifiable("fit_mle: zero variance in log-durations");
        }
    }

    GradObjective neg_ll = [&](const std::vector<double>& theta, std::vector<double>& grad) {
        try {
            double ll = log_likelihood_grad(family, theta, sample, grad);
            for (double& g : grad) g = -g;
            return -ll;
        } catch (const NumericalError&) {
            // overshoot into an invalid region; the line search backtracks
            grad.assign(theta.size(), 0.0);
            return std::numeric_limits<double>::infinity();
        }
    };

    OptimOptions opt;
    opt.max_iterations = options.max_iterations;
    opt.grad_tol = options.grad_tol;
    opt.rel_f_tol = options.rel_f_tol;

    // GenGamma's lognormal limit (k -> inf) is a long curved ridge that joint BFGS
    // walks too slowly. Profile out (log lambda, log p) and Newton-step log k
    // alone: along the ridge each step advances log k by about one, so the
    // gradient decays geometrically and stationarity is either reached honestly
    // or the log-rate needed by the conditional optimum overflows a double and
    // the fit stays flagged as non-converged (a boundary sample).
    // returns true when the walk ran into the representability cap on |log k|,
    // i.e. the sample sits on the family's lognormal boundary
    auto profile_logk = [&](OptimResult& res) {
        bool hit_cap = false;
        OptimOptions inner_opt = opt;
        inner_opt.max_iterations = 120;  // the Newton polish finishes the endgame
        double u = res.x[2];
        std::vector<double> inner = {res.x[0], res.x[1]};
        std::vector<double> g3(3);
        // envelope theorem: at each conditional optimum g3[2] IS the profile
        // derivative, so secant steps on it are Newton steps on the profile
        double u_prev = 0.0, gu_prev = 0.0;
        bool have_prev = false;
        for (int outer = 0; outer < 60; ++outer) {
            GradObjective cond = [&](const std::vector<double>& v, std::vector<double>& g) {
                std::vector<double> full = {v[0], v[1], u};
                std::vector<double> gf;
                double f = neg_ll(full, gf);
                g = {gf[0], gf[1]};
                return f;
            };
            OptimResult ir = minimize_bfgs(cond, inner, inner_opt);
            inner = ir.x;
            std::vector<double> th = {inner[0], inner[1], u};
            double fval = neg_ll(th, g3);
            double gmax = std::max({std::fabs(g3[0]), std::fabs(g3[1]), std::fabs(g3[2])});
            res.iterations += 1;
            if (fval < res.fval || gmax < opt.grad_tol) {
                res.x = th;
                res.fval = fval;
            }
            if (gmax < opt.grad_tol) {
                res.converged = true;
                res.grad_max_norm = gmax;
                break;
            }
            double gu = g3[2];
            // a sloppy inner solve still pins the profile derivative to ~its own
            // gradient size; only a badly failed solve makes gu untrustworthy
            double inner_gmax = std::max(std::fabs(g3[0]), std::fabs(g3[1]));
            bool trust = ir.converged || inner_gmax < 1e-4;
            // along the ridge the profile gradient decays at most geometrically
            // per unit of log k, so this far out it can no longer reach tolerance
            // before the cap: the sample sits on the lognormal boundary
            if (trust && ((u >= 9.0 && gu < -1e-6) || (u <= -9.0 && gu > 1e-6))) {
                hit_cap = true;
                break;
            }
            double step;
            if (!trust) {
                step = gu > 0.0 ? -1.0 : 1.0;
            } else {
                if (have_prev && u != u_prev && gu != gu_prev) {
                    double slope = (gu - gu_prev) / (u - u_prev);
                    step = slope > 0.0 ? -gu / slope : (gu > 0.0 ? -1.0 : 1.0);
                } else {
                    step = gu > 0.0 ? -1.0 : 1.0;
                }
                u_prev = u;
                gu_prev = gu;
                have_prev = true;
            }
            step = std::clamp(step, -2.0, 2.0);
            u += step;
            if (std::fabs(u) > 11.0) {
                hit_cap = true;
                break;
            }
        }
        return hit_cap;
    };

    std::vector<double> base = initial_theta(family, sample);
    OptimResult best;
    bool have_best = false;
    for (int r = 0; r <= options.restarts; ++r) {
        std::vector<double> start = base;
        if (r > 0) {
            // deterministic perturbations around the base start
            for (std::size_t i = 0; i < start.size(); ++i) {
                double sgn = ((r + static_cast<int>(i)) % 2 == 0) ? 1.0 : -1.0;
                start[i] += sgn * 0.15 * r;
            }
        }
        OptimResult res;
        bool boundary = false;
        if (family == Family::GenGamma) {
            res.x = start;
            std::vector<double> g0;
            res.fval = neg_ll(start, g0);
            boundary = profile_logk(res);
        } else {
            res = minimize_bfgs(neg_ll, start, opt);
        }
        if (!have_best || (res.converged && !best.converged) ||
            (res.converged == best.converged && res.fval < best.fval)) {
            best = res;
            have_best = true;
        }
        // the likelihoods here are unimodal: a converged optimum ends the
        // search, and a boundary sample cannot converge from any start
        if (best.converged || boundary) break;
    }

    FitResult fit;
    fit.params = from_unconstrained(family, best.x);
    fit.loglik = -best.fval;
    fit.n = sample.size();
    fit.n_params = n_params;
    fit.aic = 2.0 * n_params - 2.0 * fit.loglik;
    fit.bic = n_params * std::log(static_cast<double>(fit.n)) - 2.0 * fit.loglik;
    fit.mst = quantile(fit.params, 0.5);
    fit.converged = best.converged;
    fit.iterations = best.iterations;
    fit.covariance = covariance_from_hessian(neg_ll, best.x);
    return fit;
}

ComparisonTable compare_models(const Sample& sample, const std::vector<Family>& families,
                               const FitOptions& options) {
    ComparisonTable table;
    for (Family f : families) {
        ComparisonRow row;
        row.family = f;
        try {
            FitResult fit = fit_mle(f, sample, options);
            if (!fit.converged) row.note = "not converged";
            row.fit = std::move(fit);
        } catch (const std::exception& e) {
            row.note = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    auto usable = [](const ComparisonRow& r) { return r.fit.has_value() && r.note.empty(); };
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [&](const ComparisonRow& a, const ComparisonRow& b) {
                         if (usable(a) != usable(b)) return usable(a);
                         if (!usable(a)) return false;
                         if (a.fit->aic != b.fit->aic) return a.fit->aic < b.fit->aic;
                         if (a.fit->bic != b.fit->bic) return a.fit->bic < b.fit->bic;
                         return a.fit->n_params < b.fit->n_params;
                     });
    double best_aic = 0.0, best_bic = 0.0;
    for (const auto& row : table.rows) {
        if (!usable(row)) continue;
        if (!table.best_by_aic || row.fit->aic < best_aic) {
            table.best_by_aic = row.family;
            best_aic = row.fit->aic;
        }
        if (!table.best_by_bic || row.fit->bic < best_bic) {
            table.best_by_bic = row.family;
            best_bic = row.fit->bic;
        }
    }
    return table;
}

KaplanMeierCurve kaplan_meier(const Sample& sample) {
    sample.validate();
    if (sample.size() == 0) throw EmptySelection("kaplan_meier: empty sample");
    // (time, observed) sorted; censored rows tie-broken after events
    std::vector<std::size_t> idx(sample.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (sample.durations[a] != sample.durations[b])
            return sample.durations[a] < sample.durations[b];
        return sample.observed[a] > sample.observed[b];
    });
    KaplanMeierCurve km;
    double s = 1.0;
    std::size_t at_risk = sample.size();
    std::size_t i = 0;
    while (i < idx.size()) {
        double t = sample.durations[idx[i]];
        std::size_t deaths = 0, removed = 0;
        while (i < idx.size() && sample.durations[idx[i]] == t) {
            if (sample.observed[idx[i]]) ++deaths;
            ++removed;
            ++i;
        }
        if (deaths > 0) {
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            km.times.push_back(t);
            km.survival.push_back(s);
            km.at_risk.push_back(at_risk);
        }
        at_risk -= removed;
    }
    return km;
}

double KaplanMeierCurve::evaluate(double t) const {
    if (t < 0.0) throw DomainError("KaplanMeierCurve: t must be nonnegative");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

namespace {
void check_grid(const std::vector<double>& grid) {
    double prev = -1.0;
    for (double t : grid) {
        if (t < 0.0 || t < prev) throw DomainError("curve grid must be sorted, nonnegative");
        prev = t;
    }
}
}  // namespace

std::vector<CurveRow> emit_curves(const DistributionParams& params,
                                  const std::vector<double>& t_grid) {
    check_grid(t_grid);
    std::vector<CurveRow> rows(t_grid.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(t_grid.size()); ++i) {
        double t = t_grid[static_cast<std::size_t>(i)];
        CurveRow& r = rows[static_cast<std::size_t>(i)];
        r.t = t;
        r.survival = survival(params, t);
        r.cum_hazard = cumulative_hazard(params, t);
    }
    return rows;
}

std::vector<CurveRow> emit_curves(const KaplanMeierCurve& km,
                                  const std::vector<double>& t_grid) {
    check_grid(t_grid);
    std::vector<CurveRow> rows;
    rows.reserve(t_grid.size());
    for (double t : t_grid) {
        CurveRow r;
        r.t = t;
        r.survival = km.evaluate(t);
        r.cum_hazard = -std::log(r.survival);
        rows.push_back(r);
    }
    return rows;
}

std::vector<CurveRow> emit_curves(const DistributionParams& a, const DistributionParams& b,
                                  const std::vector<double>& t_grid) {
    std::vector<CurveRow> rows = emit_curves(a, t_grid);
    for (auto& r : rows) r.survival_diff = r.survival - survival(b, r.t);
    return rows;
}

std::string curves_to_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    bool with_diff = !rows.empty() && rows.front().survival_diff.has_value();
    os << "t,survival,cum_hazard";
    if (with_diff) os << ",surv_diff";
    os << "\n";
    os.precision(12);
    for (const auto& r : rows) {
        os << r.t << "," << r.survival << "," << r.cum_hazard;
        if (with_diff) os << "," << (r.survival_diff ? *r.survival_diff : 0.0);
        os << "\n";
    }
    return os.str();
}

namespace {
nlohmann::json params_to_json(const DistributionParams& p) {
    nlohmann::json j;
    j["family"] = family_name(p.family);
    switch (p.family) {
        case Family::Exponential:
            j["rate"] = p.rate;
            break;
        case Family::Weibull:
        case Family::Loglogistic:
            j["rate"] = p.rate;
            j["shape_p"] = p.shape_p;
            break;
        case Family::Lognormal:
            j["mu"] = p.mu;
            j["sigma"] = p.sigma;
            break;
        case Family::GenGamma:
            j["rate"] = p.rate;
            j["shape_p"] = p.shape_p;
            j["shape_k"] = p.shape_k;
            break;
    }
    return j;
}
}  // namespace

std::string comparison_to_csv(const ComparisonTable& table) {
    std::ostringstream os;
    os << "family,aic,bic,mst,loglik,n_params,converged,note\n";
    os.precision(12);
    for (const auto& row : table.rows) {
        os << family_name(row.family) << ",";
        if (row.fit) {
            os << row.fit->aic << "," << row.fit->bic << "," << row.fit->mst << ","
               << row.fit->loglik << "," << row.fit->n_params << ","
               << (row.fit->converged ? "true" : "false");
        } else {
            os << ",,,,,";
        }
        os << "," << row.note << "\n";
    }
    return os.str();
}

std::string comparison_to_json(const ComparisonTable& table) {
    nlohmann::json j;
    j["families"] = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json r;
        r["family"] = family_name(row.family);
        if (row.fit) {
            r["aic"] = row.fit->aic;
            r["bic"] = row.fit->bic;
            r["mst"] = row.fit->mst;
            r["loglik"] = row.fit->loglik;
            r["params"] = params_to_json(row.fit->params);
            r["converged"] = row.fit->converged;
        }
        if (!row.note.empty()) r["note"] = row.note;
        j["families"].push_back(r);
    }
    if (table.best_by_aic) j["best_by_aic"] = family_name(*table.best_by_aic);
    if (table.best_by_bic) j["best_by_bic"] = family_name(*table.best_by_bic);
    return j.dump(2);
}

}  // namespace lcd
