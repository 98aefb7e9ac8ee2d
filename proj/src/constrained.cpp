#include "cfgmm/constrained.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfgmm/errors.hpp"
#include "cfgmm/special_functions.hpp"
#include "em_driver.hpp"

namespace cfgmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ComponentSums sums_of(std::span<const double> data, std::span<const double> weights) {
    if (data.size() != weights.size()) {
        throw std::invalid_argument("constrained update: data and weights lengths differ");
    }
    ComponentSums s;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double lx = std::log(data[i]);
        s.z += weights[i];
        s.zx += weights[i] * data[i];
        s.zxlogx += weights[i] * data[i] * lx;
        s.zlogx += weights[i] * lx;
    }
    return s;
}

double score_derivative(const ComponentSums& sums, double mode, double scale) {
    // d/db of the residual: Sz*(1 - m/b + (m/b)^2 * psi'(m/b + 1))
    const double r = mode / scale;
    return sums.z * (1.0 - r + r * r * trigamma(r + 1.0));
}

}  // namespace

double constrained_score(const ComponentSums& sums, double mode, double scale) {
    if (!(scale > 0.0)) throw std::domain_error("constrained_score: scale must be positive");
    if (mode == 0.0) {
        return sums.z * scale - sums.zx;
    }
    const double inner =
        mode + scale - mode * std::log(scale) - mode * digamma(mode / scale + 1.0);
    return sums.z * inner + mode * sums.zlogx - sums.zx;
}

double newton_solve_b_from_sums(const ComponentSums& sums, double mode, double initial_guess) {
    if (!(sums.z > 0.0)) throw solve_failure("newton_solve_b: total weight must be positive");
    if (!std::isfinite(mode) || mode < 0.0) {
        throw solve_failure("newton_solve_b: boundary mode must be finite and >= 0");
    }
    const double mean = sums.zx / sums.z;
    if (mode == 0.0) return mean;  // residual is linear in b

    double b = initial_guess > 0.0 && std::isfinite(initial_guess) ? initial_guess : mean;

    // establish a sign-change bracket [b_lo, b_hi] around the guess; the
    // residual is increasing in b so grow geometrically until the signs flip
    const double lo_limit = 1e-12 * mean;
    const double hi_limit = 1e12 * mean;
    double b_lo = std::clamp(b, lo_limit, hi_limit);
    double b_hi = b_lo;
    double g_lo = constrained_score(sums, mode, b_lo);
    double g_hi = g_lo;
    while (g_lo > 0.0 && b_lo > lo_limit) {
        b_lo = std::max(b_lo / 4.0, lo_limit);
        g_lo = constrained_score(sums, mode, b_lo);
    }
    while (g_hi < 0.0 && b_hi < hi_limit) {
        b_hi = std::min(b_hi * 4.0, hi_limit);
        g_hi = constrained_score(sums, mode, b_hi);
    }
    if (g_lo > 0.0 || g_hi < 0.0) {
        throw solve_failure("newton_solve_b: no sign change on [1e-12, 1e12] * weighted mean");
    }
    if (g_lo == 0.0) return b_lo;
    if (g_hi == 0.0) return b_hi;

    // Newton in theta = ln b with bisection fallback inside the bracket
    b = std::clamp(b, b_lo, b_hi);
    double g = constrained_score(sums, mode, b);
    const double tol = 1e-10 * sums.z * std::max(1.0, mode + mean);
    constexpr int kMaxIterations = 200;
    for (int it = 0; it < kMaxIterations; ++it) {
        if (std::abs(g) <= tol) break;
        if (g > 0.0) {
            b_hi = b;
        } else {
            b_lo = b;
        }
        const double deriv = score_derivative(sums, mode, b);
        double next = 0.0;
        if (deriv > 0.0 && std::isfinite(deriv)) {
            // theta-space Newton step: theta' = theta - g / (dg/dtheta), dg/dtheta = b * deriv
            next = b * std::exp(-g / (b * deriv));
        }
        if (!(next > b_lo) || !(next < b_hi) || !std::isfinite(next)) {
            next = 0.5 * (b_lo + b_hi);  // bisection fallback
        }
        if (next == b) break;  // bracket exhausted at machine precision
        b = next;
        g = constrained_score(sums, mode, b);
    }
    return b;
}

double newton_solve_b(std::span<const double> data, std::span<const double> weights, double mode,
                      double initial_guess) {
    return newton_solve_b_from_sums(sums_of(data, weights), mode, initial_guess);
}

ProjectionResult check_and_project_from_sums(const ComponentSums& sums, double shape, double scale,
                                             const ModeInterval& interval) {
    const double mode = gamma_mode(GammaParams(shape, scale));
    if (mode >= interval.lower && mode <= interval.upper) {
        return {shape, scale, false};
    }
    // nearest violated boundary; a -inf mode against a finite lower bound
    // projects to that bound since -inf is not attainable as a mode
    const double target = mode < interval.lower ? interval.lower : interval.upper;
    if (!std::isfinite(target)) {
        throw solve_failure("check_and_project: violated boundary is not finite");
    }
    const double new_scale = newton_solve_b_from_sums(sums, target, scale);
    const double new_shape = target / new_scale + 1.0;
    return {new_shape, new_scale, true};
}

ProjectionResult check_and_project(std::span<const double> data, std::span<const double> weights,
                                   double shape, double scale, const ModeInterval& interval) {
    return check_and_project_from_sums(sums_of(data, weights), shape, scale, interval);
}

namespace {

detail::ComponentUpdate make_constrained_update(const ModeBounds& bounds) {
    return [&bounds](const detail::UpdateInputs& in) -> std::pair<double, double> {
        const auto [shape, scale] = detail::closed_form_update(in.sums);
        const ProjectionResult p =
            check_and_project_from_sums(in.sums, shape, scale, bounds.intervals[in.comp]);
        return {p.shape, p.scale};
    };
}

}  // namespace

FitResult constrained_em_fit(std::span<const double> data, std::size_t k, const ModeBounds& bounds,
                             const FitConfig& config) {
    bounds.validate();
    if (bounds.size() != k) {
        throw std::invalid_argument("constrained_em_fit: bounds count must equal K");
    }
    return detail::run_em(data, k, config, make_constrained_update(bounds), &bounds);
}

FitResult constrained_multi_restart_fit(std::span<const double> data, std::size_t k,
                                        const ModeBounds& bounds, const FitConfig& config) {
    bounds.validate();
    if (bounds.size() != k) {
        throw std::invalid_argument("constrained_multi_restart_fit: bounds count must equal K");
    }
    return detail::run_multi_restart(data, k, config, make_constrained_update(bounds), &bounds);
}

}  // namespace cfgmm
