#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lcd {

enum class Family { Exponential, Weibull, Lognormal, Loglogistic, GenGamma };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// Parameters of one duration family. Only the fields a family uses are
// meaningful; factories set them and validate() enforces positivity.
//   Exponential:  rate
//   Weibull:      rate, shape_p
//   Loglogistic:  rate, shape_p
//   Lognormal:    mu, sigma
//   GenGamma:     rate, shape_p, shape_k
struct DistributionParams {
    Family family = Family::Exponential;
    double rate = 0.0;     // lambda
    double shape_p = 0.0;  // p
    double shape_k = 0.0;  // k
    double mu = 0.0;
    double sigma = 0.0;

    static DistributionParams exponential(double rate);
    static DistributionParams weibull(double p, double rate);
    static DistributionParams lognormal(double mu, double sigma);
    static DistributionParams loglogistic(double p, double rate);
    static DistributionParams gen_gamma(double k, double p, double rate);

    void validate() const;
    int n_free_params() const;
};

// Durations with right-censoring flags (1 = event observed).
struct Sample {
    std::vector<double> durations;
    std::vector<std::uint8_t> observed;

    std::size_t size() const { return durations.size(); }
    std::size_t n_events() const;
    void validate() const;
};

double log_pdf(const DistributionParams& params, double t);
double pdf(const DistributionParams& params, double t);
double log_survival(const DistributionParams& params, double t);
double survival(const DistributionParams& params, double t);

// hazard = pdf/survival computed in log space; sets *underflow and returns
// +inf when S(t) is below the representable range.
double hazard(const DistributionParams& params, double t, bool* underflow = nullptr);

double cumulative_hazard(const DistributionParams& params, double t);

double quantile(const DistributionParams& params, double q);

// Sum of log f over observed rows and log S over censored rows.
// The default is an OpenMP block-reduced sum with deterministic output;
// the _serial variant is the reference kept for testing and benchmarks.
double log_likelihood(const DistributionParams& params, const Sample& sample);
double log_likelihood_serial(const DistributionParams& params, const Sample& sample);

Sample sample_durations(const DistributionParams& params, std::size_t n, std::uint64_t seed);

// --- unconstrained reparameterization used by the fitters ---------------
// Layouts: Exponential [log rate]; Weibull/Loglogistic [log rate, log p];
// Lognormal [mu, log sigma]; GenGamma [log rate, log p, log k].
std::vector<double> to_unconstrained(const DistributionParams& params);
DistributionParams from_unconstrained(Family family, const std::vector<double>& theta);

// Log-likelihood and its analytic gradient with respect to the
// unconstrained parameters (GenGamma uses a numeric shape-k derivative
// for the censored survival term).
double log_likelihood_grad(Family family, const std::vector<double>& theta,
                           const Sample& sample, std::vector<double>& grad);

}  // namespace lcd
