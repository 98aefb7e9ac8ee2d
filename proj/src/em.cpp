#include "cfgmm/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "cfgmm/errors.hpp"
#include "em_driver.hpp"

namespace cfgmm {

namespace {

constexpr double kEmptyComponentFraction = 1e-8;

void validate_data(std::span<const double> data, std::size_t k) {
    if (k < 1) throw std::invalid_argument("fit: need at least one component");
    if (data.size() < 2 * k) {
        throw std::invalid_argument("fit: need at least 2 data points per component");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i]) || data[i] <= 0.0) {
            throw std::invalid_argument("fit: data must be positive and finite (value at index " +
                                        std::to_string(i) + " is " + std::to_string(data[i]) + ")");
        }
    }
}

std::vector<double> log_values(std::span<const double> data) {
    std::vector<double> lx(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) lx[i] = std::log(data[i]);
    return lx;
}

// Signals that the current run must be re-initialized.
struct DivergenceSignal {};

}  // namespace

namespace detail {

std::pair<double, double> closed_form_update(const ComponentSums& s) {
    const double denom = s.z * s.zxlogx - s.zlogx * s.zx;
    if (!(denom > 0.0)) {
        throw degenerate_component_error("closed-form update: non-positive denominator");
    }
    const double shape = s.z * s.zx / denom;
    const double scale = denom / (s.z * s.z);
    return {shape, scale};
}

}  // namespace detail

void FitConfig::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("FitConfig: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("FitConfig: tolerance must be > 0");
    if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be >= 1");
    if (max_divergence_retries < 0) {
        throw std::invalid_argument("FitConfig: max_divergence_retries must be >= 0");
    }
}

std::string to_string(FitStatus s) {
    switch (s) {
        case FitStatus::Converged: return "converged";
        case FitStatus::MaxIterations: return "max_iterations";
        case FitStatus::DivergenceExhausted: return "divergence_retries_exhausted";
    }
    return "unknown";
}

namespace detail {

MixtureModel initialize_sorted(std::span<const double> sorted, std::size_t k, Rng& rng) {
    const std::size_t n = sorted.size();
    constexpr int kMaxPartitionRedraws = 100;
    for (int attempt = 0; attempt < kMaxPartitionRedraws; ++attempt) {
        const std::vector<double> weights = simplex_draw(k, rng);
        // contiguous blocks with sizes proportional to the weights, each
        // holding at least 2 points
        std::vector<std::size_t> cuts(k + 1, 0);
        cuts[k] = n;
        double cum = 0.0;
        for (std::size_t j = 1; j < k; ++j) {
            cum += weights[j - 1];
            const auto target = static_cast<std::size_t>(std::llround(cum * static_cast<double>(n)));
            const std::size_t lo = cuts[j - 1] + 2;
            const std::size_t hi = n - 2 * (k - j);
            cuts[j] = std::clamp(target, lo, hi);
        }
        MixtureModel model;
        model.components.reserve(k);
        bool ok = true;
        for (std::size_t j = 0; j < k; ++j) {
            try {
                const GammaParams p =
                    mom_estimate(sorted.subspan(cuts[j], cuts[j + 1] - cuts[j]));
                model.components.push_back({p.shape, p.scale, weights[j]});
            } catch (const degenerate_data_error&) {
                ok = false;  // zero-variance block; redraw the partition
                break;
            }
        }
        if (ok) return model;
    }
    throw degenerate_data_error("initialize: no partition with positive block variances found");
}

namespace {

struct RunState {
    MixtureModel model;
    std::vector<double> trajectory;
    int iterations = 0;
    bool converged = false;
    long underflow_rows = 0;
};

// One initialization-to-convergence pass; throws DivergenceSignal.
RunState run_single_pass(std::span<const double> data, std::span<const double> logx,
                         std::span<const double> sorted, std::size_t k, const FitConfig& config,
                         const ComponentUpdate& update, Rng& rng) {
    RunState st;
    st.model = initialize_sorted(sorted, k, rng);
    const double n = static_cast<double>(data.size());

    Responsibilities resp;
    EStepStats stats = estep(data, logx, st.model, resp, config.exec);
    st.underflow_rows += stats.underflow_rows;
    if (!std::isfinite(stats.loglik)) throw DivergenceSignal{};
    st.trajectory.push_back(stats.loglik);

    double prev_ll = stats.loglik;
    for (int t = 1; t <= config.max_iterations; ++t) {
        const std::vector<ComponentSums> sums = weighted_sums(data, logx, resp, config.exec);
        MixtureModel next;
        next.components.resize(k);
        for (std::size_t j = 0; j < k; ++j) {
            if (!(sums[j].z >= kEmptyComponentFraction * n)) throw DivergenceSignal{};
            double shape = 0.0;
            double scale = 0.0;
            try {
                std::tie(shape, scale) = update({data, logx, resp, sums[j], j,
                                                 st.model.components[j].shape,
                                                 st.model.components[j].scale});
            } catch (const degenerate_component_error&) {
                throw DivergenceSignal{};
            } catch (const solve_failure&) {
                throw DivergenceSignal{};
            }
            if (!std::isfinite(shape) || shape <= 0.0 || !std::isfinite(scale) || scale <= 0.0) {
                throw DivergenceSignal{};
            }
            next.components[j] = {shape, scale, sums[j].z / n};
        }
        st.model = std::move(next);

        stats = estep(data, logx, st.model, resp, config.exec);
        st.underflow_rows += stats.underflow_rows;
        if (!std::isfinite(stats.loglik)) throw DivergenceSignal{};
        st.trajectory.push_back(stats.loglik);
        st.iterations = t;

        const double criterion = std::abs(stats.loglik - prev_ll) / n;
        prev_ll = stats.loglik;
        if (criterion <= config.tolerance) {
            st.converged = true;
            break;
        }
    }
    return st;
}

}  // namespace

FitResult run_em(std::span<const double> data, std::size_t k, const FitConfig& config,
                 const ComponentUpdate& update, const ModeBounds* bounds) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    validate_data(data, k);

    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const std::vector<double> logx = log_values(data);

    Rng rng(config.seed);
    FitResult result;
    for (int attempt = 0; attempt <= config.max_divergence_retries; ++attempt) {
        try {
            RunState st = run_single_pass(data, logx, sorted, k, config, update, rng);
            result.model = std::move(st.model);
            result.converged = st.converged;
            result.status = st.converged ? FitStatus::Converged : FitStatus::MaxIterations;
            result.iterations = st.iterations;
            result.loglik_trajectory = std::move(st.trajectory);
            result.final_loglik = result.loglik_trajectory.back();
            result.underflow_rows += st.underflow_rows;
            break;
        } catch (const DivergenceSignal&) {
            result.divergence_restarts += 1;
            if (attempt == config.max_divergence_retries) {
                // keep whatever the last re-initialization would produce as a
                // diagnostic best effort
                Rng probe(rng);
                result.model = initialize_sorted(sorted, k, probe);
                result.converged = false;
                result.status = FitStatus::DivergenceExhausted;
                result.iterations = 0;
                result.loglik_trajectory = {log_likelihood(data, result.model, config.exec)};
                result.final_loglik = result.loglik_trajectory.back();
            }
        }
    }

    ModeBounds echo = bounds != nullptr ? *bounds : ModeBounds{};
    canonical_order(result.model, bounds != nullptr ? &echo : nullptr);
    result.bounds = std::move(echo);

    result.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

FitResult run_multi_restart(std::span<const double> data, std::size_t k, const FitConfig& config,
                            const ComponentUpdate& update, const ModeBounds* bounds) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    FitResult best;
    bool have_best = false;
    int total_divergence = 0;
    long total_underflow = 0;
    for (int r = 0; r < config.restarts; ++r) {
        FitConfig run_config = config;
        run_config.seed = config.seed + static_cast<std::uint64_t>(r);
        FitResult candidate = run_em(data, k, run_config, update, bounds);
        total_divergence += candidate.divergence_restarts;
        total_underflow += candidate.underflow_rows;
        // prefer converged fits, then higher final log-likelihood, then the
        // lowest restart index (strict > keeps the earliest maximum)
        const bool better =
            !have_best ||
            (candidate.converged && !best.converged) ||
            (candidate.converged == best.converged && candidate.final_loglik > best.final_loglik);
        if (better) {
            best = std::move(candidate);
            have_best = true;
        }
    }
    best.restarts_used = config.restarts;
    best.divergence_restarts = total_divergence;
    best.underflow_rows = total_underflow;
    best.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

}  // namespace detail

MixtureModel initialize(std::span<const double> data, std::size_t k, Rng& rng) {
    validate_data(data, k);
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    return detail::initialize_sorted(sorted, k, rng);
}

Responsibilities responsibilities(std::span<const double> data, const MixtureModel& model,
                                  Exec exec) {
    model.validate();
    const std::vector<double> logx = log_values(data);
    Responsibilities resp;
    estep(data, logx, model, resp, exec);
    return resp;
}

std::pair<double, double> update_component(std::span<const double> data,
                                           std::span<const double> weights) {
    if (data.size() != weights.size()) {
        throw std::invalid_argument("update_component: data and weights lengths differ");
    }
    ComponentSums s;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double lx = std::log(data[i]);
        s.z += weights[i];
        s.zx += weights[i] * data[i];
        s.zxlogx += weights[i] * data[i] * lx;
        s.zlogx += weights[i] * lx;
    }
    if (!(s.z > 0.0)) {
        throw degenerate_component_error("update_component: total weight must be positive");
    }
    return detail::closed_form_update(s);
}

std::vector<double> update_weights(const Responsibilities& resp) {
    std::vector<double> w(resp.cols, 0.0);
    for (std::size_t i = 0; i < resp.rows; ++i) {
        for (std::size_t j = 0; j < resp.cols; ++j) w[j] += resp(i, j);
    }
    const double n = static_cast<double>(resp.rows);
    for (auto& v : w) v /= n;
    return w;
}

double log_likelihood(std::span<const double> data, const MixtureModel& model, Exec exec) {
    model.validate();
    const std::vector<double> logx = log_values(data);
    return mixture_loglik(data, logx, model, exec);
}

FitResult em_fit(std::span<const double> data, std::size_t k, const FitConfig& config) {
    const auto update = [](const detail::UpdateInputs& in) {
        return detail::closed_form_update(in.sums);
    };
    return detail::run_em(data, k, config, update, nullptr);
}

FitResult multi_restart_fit(std::span<const double> data, std::size_t k, const FitConfig& config) {
    const auto update = [](const detail::UpdateInputs& in) {
        return detail::closed_form_update(in.sums);
    };
    return detail::run_multi_restart(data, k, config, update, nullptr);
}

}  // namespace cfgmm
