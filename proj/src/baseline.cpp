#include "cfgmm/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "cfgmm/errors.hpp"
#include "em_driver.hpp"

namespace cfgmm {

namespace {

struct ScoreEval {
    double residual;    // ln a - psi(a) - s
    double derivative;  // 1/a - psi'(a), strictly negative
};

// Full weighted pass over the data evaluating the score at shape a. The
// sufficient statistics are deliberately not cached across iterations;
// re-scanning per root-finding step is the cost profile of the numerical
// M-step this baseline reproduces.
ScoreEval score_at(std::span<const double> data, std::span<const double> weights, double a) {
    double w = 0.0;
    double wx = 0.0;
    double wlogx = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        w += weights[i];
        wx += weights[i] * data[i];
        wlogx += weights[i] * std::log(data[i]);
    }
    const double s = std::log(wx / w) - wlogx / w;
    return {std::log(a) - digamma(a) - s, 1.0 / a - trigamma(a)};
}

double weighted_mean(std::span<const double> data, std::span<const double> weights) {
    double w = 0.0;
    double wx = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        w += weights[i];
        wx += weights[i] * data[i];
    }
    return wx / w;
}

}  // namespace

std::pair<double, double> weighted_gamma_mle(std::span<const double> data,
                                             std::span<const double> weights) {
    if (data.size() != weights.size()) {
        throw std::invalid_argument("weighted_gamma_mle: data and weights lengths differ");
    }
    double w = 0.0;
    double wx = 0.0;
    double wlogx = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(weights[i] >= 0.0)) {
            throw std::invalid_argument("weighted_gamma_mle: weights must be nonnegative");
        }
        w += weights[i];
        wx += weights[i] * data[i];
        wlogx += weights[i] * std::log(data[i]);
    }
    if (!(w > 0.0)) {
        throw degenerate_component_error("weighted_gamma_mle: total weight must be positive");
    }
    const double s = std::log(wx / w) - wlogx / w;
    if (!(s > 0.0)) {
        throw degenerate_component_error(
            "weighted_gamma_mle: log-moment gap is not positive (degenerate sample)");
    }

    double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);

    // ln a - psi(a) is strictly decreasing: bracket the root around the guess
    double a_lo = a;
    double a_hi = a;
    ScoreEval e_lo = score_at(data, weights, a_lo);
    ScoreEval e_hi = e_lo;
    constexpr double kShapeLo = 1e-12;
    constexpr double kShapeHi = 1e12;
    while (e_lo.residual < 0.0 && a_lo > kShapeLo) {
        a_lo = std::max(a_lo / 4.0, kShapeLo);
        e_lo = score_at(data, weights, a_lo);
    }
    while (e_hi.residual > 0.0 && a_hi < kShapeHi) {
        a_hi = std::min(a_hi * 4.0, kShapeHi);
        e_hi = score_at(data, weights, a_hi);
    }
    if (e_lo.residual < 0.0 || e_hi.residual > 0.0) {
        throw solve_failure("weighted_gamma_mle: shape root not bracketed in [1e-12, 1e12]");
    }

    a = std::clamp(a, a_lo, a_hi);
    ScoreEval e = score_at(data, weights, a);
    constexpr double kResidualTol = 1e-10;
    constexpr int kMaxIterations = 100;
    for (int it = 0; it < kMaxIterations; ++it) {
        if (std::abs(e.residual) <= kResidualTol) break;
        if (e.residual > 0.0) {
            a_lo = a;  // residual decreasing: root is above
        } else {
            a_hi = a;
        }
        double next = a - e.residual / e.derivative;
        if (!(next > a_lo) || !(next < a_hi) || !std::isfinite(next)) {
            next = 0.5 * (a_lo + a_hi);
        }
        if (next == a) break;
        a = next;
        e = score_at(data, weights, a);
    }
    const double scale = weighted_mean(data, weights) / a;
    return {a, scale};
}

double weighted_component_loglik(std::span<const double> data, std::span<const double> weights,
                                 const GammaParams& p) {
    const double norm = p.shape * std::log(p.scale) + log_gamma_fn(p.shape);
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        acc += weights[i] * ((p.shape - 1.0) * std::log(data[i]) - data[i] / p.scale - norm);
    }
    return acc;
}

namespace {

detail::ComponentUpdate make_baseline_update() {
    // scratch column reused across iterations of one fit; runs are
    // sequential per fit so a shared buffer is safe
    auto scratch = std::make_shared<std::vector<double>>();
    return [scratch](const detail::UpdateInputs& in) -> std::pair<double, double> {
        const std::size_t n = in.resp.rows;
        const std::size_t k = in.resp.cols;
        scratch->resize(n);
        for (std::size_t i = 0; i < n; ++i) (*scratch)[i] = in.resp.z[i * k + in.comp];
        return weighted_gamma_mle(in.x, *scratch);
    };
}

}  // namespace

FitResult baseline_em_fit(std::span<const double> data, std::size_t k, const FitConfig& config) {
    return detail::run_em(data, k, config, make_baseline_update(), nullptr);
}

FitResult baseline_multi_restart_fit(std::span<const double> data, std::size_t k,
                                     const FitConfig& config) {
    return detail::run_multi_restart(data, k, config, make_baseline_update(), nullptr);
}

}  // namespace cfgmm
