#include "lcd/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcd/errors.hpp"
#include "lcd/parallel.hpp"
#include "lcd/rng.hpp"
#include "lcd/special.hpp"

namespace lcd {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kLogUnderflow = -745.0;  // below log(DBL_MIN subnormal range)

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be positive and finite");
    }
}
}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::Exponential: return "exponential";
        case Family::Weibull: return "weibull";
        case Family::Lognormal: return "lognormal";
        case Family::Loglogistic: return "loglogistic";
        case Family::GenGamma: return "gengamma";
    }
    return "unknown";
}

Family family_from_name(const std::string& name) {
    if (name == "exponential") return Family::Exponential;
    if (name == "weibull") return Family::Weibull;
    if (name == "lognormal") return Family::Lognormal;
    if (name == "loglogistic") return Family::Loglogistic;
    if (name == "gengamma") return Family::GenGamma;
    throw ConfigError("unknown family: " + name);
}

DistributionParams DistributionParams::exponential(double rate) {
    DistributionParams p;
    p.family = Family::Exponential;
    p.rate = rate;
    p.validate();
    return p;
}

DistributionParams DistributionParams::weibull(double shape, double rate) {
    DistributionParams p;
    p.family = Family::Weibull;
    p.shape_p = shape;
    p.rate = rate;
    p.validate();
    return p;
}

DistributionParams DistributionParams::lognormal(double mu, double sigma) {
    DistributionParams p;
    p.family = Family::Lognormal;
    p.mu = mu;
    p.sigma = sigma;
    p.validate();
    return p;
}

DistributionParams DistributionParams::loglogistic(double shape, double rate) {
    DistributionParams p;
    p.family = Family::Loglogistic;
    p.shape_p = shape;
    p.rate = rate;
    p.validate();
    return p;
}

DistributionParams DistributionParams::gen_gamma(double k, double shape, double rate) {
    DistributionParams p;
    p.family = Family::GenGamma;
    p.shape_k = k;
    p.shape_p = shape;
    p.rate = rate;
    p.validate();
    return p;
}

void DistributionParams::validate() const {
    switch (family) {
        case Family::Exponential:
            require_positive(rate, "rate");
            break;
        case Family::Weibull:
        case Family::Loglogistic:
            require_positive(rate, "rate");
            require_positive(shape_p, "shape p");
            break;
        case Family::Lognormal:
            if (!std::isfinite(mu)) throw DomainError("mu must be finite");
            require_positive(sigma, "sigma");
            break;
        case Family::GenGamma:
            require_positive(rate, "rate");
            require_positive(shape_p, "shape p");
            require_positive(shape_k, "shape k");
            break;
    }
}

int DistributionParams::n_free_params() const {
    switch (family) {
        case Family::Exponential: return 1;
        case Family::Weibull:
        case Family::Lognormal:
        case Family::Loglogistic: return 2;
        case Family::GenGamma: return 3;
    }
    return 0;
}

std::size_t Sample::n_events() const {
    std::size_t n = 0;
    for (auto o : observed) n += o ? 1 : 0;
    return n;
}

void Sample::validate() const {
    if (durations.size() != observed.size()) {
        throw DataError("sample: durations and observed flags differ in length");
    }
    for (double t : durations) {
        if (!(t > 0.0)) throw DomainError("sample: nonpositive duration");
    }
}

double log_pdf(const DistributionParams& params, double t) {
    if (!(t > 0.0)) throw DomainError("pdf: t must be positive");
    switch (params.family) {
        case Family::Exponential:
            return std::log(params.rate) - params.rate * t;
        case Family::Weibull: {
            double lt = std::log(params.rate * t);
            return std::log(params.shape_p) + params.shape_p * lt - std::log(t) -
                   std::exp(params.shape_p * lt);
        }
        case Family::Lognormal: {
            double z = (std::log(t) - params.mu) / params.sigma;
            return -std::log(t) - std::log(params.sigma) - kLogSqrt2Pi - 0.5 * z * z;
        }
        case Family::Loglogistic: {
            double lt = std::log(params.rate * t);
            double u = std::exp(params.shape_p * lt);
            double log1pu = u > 1e300 ? params.shape_p * lt : std::log1p(u);
            return std::log(params.shape_p) + params.shape_p * lt - std::log(t) -
                   2.0 * log1pu;
        }
        case Family::GenGamma: {
            double lt = std::log(params.rate * t);
            double u = std::exp(params.shape_p * lt);
            return std::log(params.rate) + std::log(params.shape_p) +
                   (params.shape_p * params.shape_k - 1.0) * lt - u -
                   std::lgamma(params.shape_k);
        }
    }
    return -std::numeric_limits<double>::infinity();
}

double pdf(const DistributionParams& params, double t) { return std::exp(log_pdf(params, t)); }

double log_survival(const DistributionParams& params, double t) {
    if (t < 0.0) throw DomainError("survival: t must be nonnegative");
    if (t == 0.0) return 0.0;
    switch (params.family) {
        case Family::Exponential:
            return -params.rate * t;
        case Family::Weibull:
            return -std::pow(params.rate * t, params.shape_p);
        case Family::Lognormal: {
            double z = (std::log(t) - params.mu) / params.sigma;
            return special::norm_log_cdf(-z);
        }
        case Family::Loglogistic: {
            double lt = std::log(params.rate * t);
            double u = std::exp(params.shape_p * lt);
            return u > 1e300 ? -params.shape_p * lt : -std::log1p(u);
        }
        case Family::GenGamma: {
            double u = std::pow(params.rate * t, params.shape_p);
            return special::log_gamma_q(params.shape_k, u);
        }
    }
    return 0.0;
}

double survival(const DistributionParams& params, double t) {
    return std::exp(log_survival(params, t));
}

double hazard(const DistributionParams& params, double t, bool* underflow) {
    if (underflow) *underflow = false;
    if (!(t > 0.0)) throw DomainError("hazard: t must be positive");
    double ls = log_survival(params, t);
    if (ls < kLogUnderflow) {
        if (underflow) *underflow = true;
        return std::numeric_limits<double>::infinity();
    }
    return std::exp(log_pdf(params, t) - ls);
}

double cumulative_hazard(const DistributionParams& params, double t) {
    return -log_survival(params, t);
}

double quantile(const DistributionParams& params, double q) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile: q outside (0,1)");
    switch (params.family) {
        case Family::Exponential:
            return -std::log1p(-q) / params.rate;
        case Family::Weibull:
            return std::pow(-std::log1p(-q), 1.0 / params.shape_p) / params.rate;
        case Family::Lognormal:
            return std::exp(params.mu + params.sigma * special::norm_quantile(q));
        case Family::Loglogistic:
            return std::pow(q / (1.0 - q), 1.0 / params.shape_p) / params.rate;
        case Family::GenGamma: {
            // bisection in u = (rate*t)^p on Q(k, u) = 1 - q
            double target = 1.0 - q;
            double lo = 0.0, hi = std::max(params.shape_k, 1.0);
            while (special::gamma_q(params.shape_k, hi) > target) hi *= 2.0;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                if (special::gamma_q(params.shape_k, mid) > target) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo < 1e-10 * std::max(1e-300, lo)) break;
            }
            double u = 0.5 * (lo + hi);
            return std::pow(u, 1.0 / params.shape_p) / params.rate;
        }
    }
    return 0.0;
}

namespace {
double loglik_term(const DistributionParams& params, double t, bool observed) {
    return observed ? log_pdf(params, t) : log_survival(params, t);
}
}  // namespace

double log_likelihood(const DistributionParams& params, const Sample& sample) {
    sample.validate();
    if (sample.size() == 0) throw EmptySelection("log_likelihood: empty sample");
    params.validate();
    return block_sum(sample.size(), [&](std::size_t i) {
        return loglik_term(params, sample.durations[i], sample.observed[i] != 0);
    });
}

double log_likelihood_serial(const DistributionParams& params, const Sample& sample) {
    sample.validate();
    if (sample.size() == 0) throw EmptySelection("log_likelihood: empty sample");
    params.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        s += loglik_term(params, sample.durations[i], sample.observed[i] != 0);
    }
    return s;
}

Sample sample_durations(const DistributionParams& params, std::size_t n, std::uint64_t seed) {
    params.validate();
    if (n == 0) throw DomainError("sample_durations: n must be positive");
    Rng rng(seed);
    Sample s;
    s.durations.resize(n);
    s.observed.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (params.family == Family::GenGamma) {
            double g = rng.gamma(params.shape_k);
            s.durations[i] = std::pow(g, 1.0 / params.shape_p) / params.rate;
        } else {
            s.durations[i] = quantile(params, rng.uniform());
        }
    }
    return s;
}

std::vector<double> to_unconstrained(const DistributionParams& params) {
    switch (params.family) {
        case Family::Exponential:
            return {std::log(params.rate)};
        case Family::Weibull:
        case Family::Loglogistic:
            return {std::log(params.rate), std::log(params.shape_p)};
        case Family::Lognormal:
            return {params.mu, std::log(params.sigma)};
        case Family::GenGamma:
            return {std::log(params.rate), std::log(params.shape_p), std::log(params.shape_k)};
    }
    return {};
}

DistributionParams from_unconstrained(Family family, const std::vector<double>& theta) {
    switch (family) {
        case Family::Exponential:
            return DistributionParams::exponential(std::exp(theta.at(0)));
        case Family::Weibull:
            return DistributionParams::weibull(std::exp(theta.at(1)), std::exp(theta.at(0)));
        case Family::Loglogistic:
            return DistributionParams::loglogistic(std::exp(theta.at(1)), std::exp(theta.at(0)));
        case Family::Lognormal:
            return DistributionParams::lognormal(theta.at(0), std::exp(theta.at(1)));
        case Family::GenGamma:
            return DistributionParams::gen_gamma(std::exp(theta.at(2)), std::exp(theta.at(1)),
                                                std::exp(theta.at(0)));
    }
    throw ConfigError("from_unconstrained: bad family");
}

double log_likelihood_grad(Family family, const std::vector<double>& theta,
                           const Sample& sample, std::vector<double>& grad) {
    DistributionParams params = from_unconstrained(family, theta);
    sample.validate();
    grad.assign(theta.size(), 0.0);
    double ll = 0.0;
    const double rate = params.rate, p = params.shape_p, k = params.shape_k;
    // observation-independent pieces, hoisted out of the hot loop
    const double lgk = family == Family::GenGamma ? std::lgamma(k) : 0.0;
    const double dgk = family == Family::GenGamma ? special::digamma(k) : 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double t = sample.durations[i];
        const bool obs = sample.observed[i] != 0;
        switch (family) {
            case Family::Exponential: {
                if (obs) {
                    ll += std::log(rate) - rate * t;
                    grad[0] += 1.0 - rate * t;
                } else {
                    ll += -rate * t;
                    grad[0] += -rate * t;
                }
                break;
            }
            case Family::Weibull: {
                double lt = std::log(rate * t);
                double u = std::exp(p * lt);
                if (obs) {
                    ll += std::log(p) + p * lt - std::log(t) - u;
                    grad[0] += p * (1.0 - u);
                    grad[1] += 1.0 + p * lt * (1.0 - u);
                } else {
                    ll += -u;
                    grad[0] += -p * u;
                    grad[1] += -p * lt * u;
                }
                break;
            }
            case Family::Lognormal: {
                double z = (std::log(t) - params.mu) / params.sigma;
                if (obs) {
                    ll += -std::log(t) - std::log(params.sigma) - kLogSqrt2Pi - 0.5 * z * z;
                    grad[0] += z / params.sigma;
                    grad[1] += z * z - 1.0;
                } else {
                    ll += special::norm_log_cdf(-z);
                    double hz = special::norm_hazard(z);
                    grad[0] += hz / params.sigma;
                    grad[1] += hz * z;
                }
                break;
            }
            case Family::Loglogistic: {
                double lt = std::log(rate * t);
                double u = std::exp(p * lt);
                double w = u / (1.0 + u);
                if (obs) {
                    double log1pu = u > 1e300 ? p * lt : std::log1p(u);
                    ll += std::log(p) + p * lt - std::log(t) - 2.0 * log1pu;
                    grad[0] += p * (1.0 - 2.0 * w);
                    grad[1] += 1.0 + p * lt * (1.0 - 2.0 * w);
                } else {
                    ll += u > 1e300 ? -p * lt : -std::log1p(u);
                    grad[0] += -p * w;
                    grad[1] += -p * lt * w;
                }
                break;
            }
            case Family::GenGamma: {
                double lt = std::log(rate * t);
                double u = std::exp(p * lt);
                if (obs) {
                    ll += std::log(rate) + std::log(p) + (p * k - 1.0) * lt - u - lgk;
                    grad[0] += p * (k - u);
                    grad[1] += 1.0 + p * lt * (k - u);
                    grad[2] += k * (p * lt - dgk);
                } else {
                    double lq = special::log_gamma_q(k, u);
                    ll += lq;
                    // d logQ / du in log space
                    double ldq = (k - 1.0) * std::log(u) - u - lgk - lq;
                    double dlogq_du = -std::exp(ldq);
                    grad[0] += dlogq_du * p * u;
                    grad[1] += dlogq_du * p * u * lt;
                    // shape-k derivative by central difference
                    double h = 1e-5 * k;
                    double d = (special::log_gamma_q(k + h, u) -
                                special::log_gamma_q(k - h, u)) /
                               (2.0 * h);
                    grad[2] += k * d;
                }
                break;
            }
        }
    }
    return ll;
}

}  // namespace lcd
