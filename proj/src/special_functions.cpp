#include "cfgmm/special_functions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cfgmm/errors.hpp"

namespace cfgmm {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*ln(2*pi)

void require_positive_finite(double x, const char* fn) {
    if (!std::isfinite(x) || x <= 0.0) {
        throw std::domain_error(std::string(fn) + ": argument must be positive and finite, got " +
                                std::to_string(x));
    }
}

}  // namespace

GammaParams::GammaParams(double shape_, double scale_) : shape(shape_), scale(scale_) {
    if (!std::isfinite(shape) || shape <= 0.0 || !std::isfinite(scale) || scale <= 0.0) {
        throw std::invalid_argument("GammaParams: shape and scale must be positive and finite");
    }
}

GenGammaParams::GenGammaParams(double shape_, double scale_, double power_)
    : shape(shape_), scale(scale_), power(power_) {
    if (!std::isfinite(shape) || shape <= 0.0 || !std::isfinite(scale) || scale <= 0.0 ||
        !std::isfinite(power) || power <= 0.0) {
        throw std::invalid_argument("GenGammaParams: all parameters must be positive and finite");
    }
}

double log_gamma_fn(double x) {
    require_positive_finite(x, "log_gamma_fn");
    // Shift into the asymptotic range, accumulating -ln x terms.
    double shift = 0.0;
    while (x < 12.0) {
        shift -= std::log(x);
        x += 1.0;
    }
    // Stirling series with Bernoulli coefficients B2..B14; truncation
    // error below 2e-18 for x >= 12.
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = inv *
                    (1.0 / 12 +
                     inv2 * (-1.0 / 360 +
                             inv2 * (1.0 / 1260 +
                                     inv2 * (-1.0 / 1680 +
                                             inv2 * (1.0 / 1188 +
                                                     inv2 * (-691.0 / 360360 +
                                                             inv2 * (1.0 / 156)))))));
    return shift + (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

double digamma(double x) {
    require_positive_finite(x, "digamma");
    double acc = 0.0;
    while (x < 12.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum B_{2j}/(2j x^{2j})
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = inv2 *
                    (1.0 / 12 +
                     inv2 * (-1.0 / 120 +
                             inv2 * (1.0 / 252 +
                                     inv2 * (-1.0 / 240 +
                                             inv2 * (1.0 / 132 +
                                                     inv2 * (-691.0 / 32760 +
                                                             inv2 * (1.0 / 12)))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
    require_positive_finite(x, "trigamma");
    double acc = 0.0;
    while (x < 12.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    // psi'(x) ~ 1/x + 1/(2x^2) + sum B_{2j}/x^{2j+1}
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = inv2 * inv *
                    (1.0 / 6 +
                     inv2 * (-1.0 / 30 +
                             inv2 * (1.0 / 42 +
                                     inv2 * (-1.0 / 30 +
                                             inv2 * (5.0 / 66 +
                                                     inv2 * (-691.0 / 2730 +
                                                             inv2 * (7.0 / 6)))))));
    return acc + inv + 0.5 * inv2 + series;
}

double gamma_log_density(double x, const GammaParams& p) {
    if (!(x > 0.0)) {
        throw std::domain_error("gamma_log_density: support is (0, inf), got x = " +
                                std::to_string(x));
    }
    return (p.shape - 1.0) * std::log(x) - x / p.scale - p.shape * std::log(p.scale) -
           log_gamma_fn(p.shape);
}

double gen_gamma_log_density(double x, const GenGammaParams& p) {
    if (!(x > 0.0)) {
        throw std::domain_error("gen_gamma_log_density: support is (0, inf), got x = " +
                                std::to_string(x));
    }
    // normalized Stacy form; the ln(power) term vanishes at power = 1
    const double ag = p.shape * p.power;
    return std::log(p.power) + (ag - 1.0) * std::log(x) - std::pow(x / p.scale, p.power) -
           ag * std::log(p.scale) - log_gamma_fn(p.shape);
}

double gamma_mode(const GammaParams& p) {
    if (p.shape < 1.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return (p.shape - 1.0) * p.scale;
}

GammaParams mom_estimate(std::span<const double> values) {
    if (values.size() < 2) {
        throw degenerate_data_error("mom_estimate: need at least 2 values");
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) {
        const double d = v - mean;
        ss += d * d;
    }
    const double var = ss / (n - 1.0);
    if (!(var > 0.0) || !(mean > 0.0)) {
        throw degenerate_data_error("mom_estimate: sample variance must be positive");
    }
    const double scale = var / mean;
    const double shape = mean / scale;  // == mean^2/var, keeps shape*scale == mean tight
    return GammaParams(shape, scale);
}

}  // namespace cfgmm
