#pragma once

#include <span>

// Scalar special functions, gamma densities and the method-of-moments
// estimator. Everything here is self-contained (no reliance on the C
// runtime's lgamma) and pure, so it is safe to call from any thread.

namespace cfgmm {

struct GammaParams {
    double shape;  // a > 0
    double scale;  // b > 0

    GammaParams(double shape_, double scale_);
};

// Three-parameter Stacy generalized gamma. Only used to document the
// derivation path of the closed-form estimators and in tests; every
// estimator in the library fixes power = 1.
struct GenGammaParams {
    double shape;
    double scale;
    double power;

    GenGammaParams(double shape_, double scale_, double power_);
};

// ln Gamma(x), x > 0. Stirling-Bernoulli series after shifting x above 12
// with ln Gamma(x) = ln Gamma(x+1) - ln x.
double log_gamma_fn(double x);

// psi(x), x > 0. Recurrence psi(x) = psi(x+1) - 1/x into the asymptotic
// range, then the Bernoulli asymptotic series.
double digamma(double x);

// psi'(x), x > 0. Same shift strategy as digamma.
double trigamma(double x);

// Log density of the shape-scale gamma; domain error for x <= 0.
double gamma_log_density(double x, const GammaParams& p);

// Log density of the Stacy generalized gamma, exp{-(x/b)^gamma} form.
// Reduces to gamma_log_density at power = 1.
double gen_gamma_log_density(double x, const GenGammaParams& p);

// Mode (a-1)*b for a >= 1; -infinity when a < 1 (no mode). The -inf
// sentinel compares less than every finite bound.
double gamma_mode(const GammaParams& p);

// Method of moments: scale = var/mean, shape = mean/scale, sample
// variance with the n-1 divisor. Throws degenerate_data_error for
// fewer than 2 values or zero variance.
GammaParams mom_estimate(std::span<const double> values);

}  // namespace cfgmm
