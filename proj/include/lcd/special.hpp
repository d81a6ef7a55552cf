#pragma once

#include <cmath>

// Special functions needed by the survival families. All routines are
// plain functions of doubles, safe for concurrent use.
namespace lcd::special {

// Standard normal CDF.
double norm_cdf(double z);

// log(Phi(z)), stable in the far left tail.
double norm_log_cdf(double z);

// Standard normal quantile (inverse CDF), refined to ~1e-14.
double norm_quantile(double q);

inline double norm_pdf(double z) {
    return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

// phi(z) / Phi(-z), the normal hazard on the z scale (Mills ratio inverse).
double norm_hazard(double z);

// Regularized lower incomplete gamma P(k, x); series for x < k+1,
// continued fraction otherwise. Relative error target 1e-12.
double gamma_p(double k, double x);

// Regularized upper incomplete gamma Q(k, x) = 1 - P(k, x).
double gamma_q(double k, double x);

// log of Q(k, x), stable when Q underflows.
double log_gamma_q(double k, double x);

double digamma(double x);

}  // namespace lcd::special
