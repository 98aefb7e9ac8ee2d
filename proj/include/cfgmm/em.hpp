#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfgmm/kernels.hpp"
#include "cfgmm/model.hpp"
#include "cfgmm/rng.hpp"

// Unconstrained K-component closed-form gamma mixture EM: method-of-moments
// initialization over a random simplex partition, log-space E-step,
// closed-form M-step, the per-observation convergence criterion
// C = |l(t) - l(t-1)| / n, divergence recovery by full re-initialization,
// and multi-restart selection by final log-likelihood.

namespace cfgmm {

struct FitConfig {
    int max_iterations = 1000;
    double tolerance = 1e-8;
    int restarts = 5;  // >= 3 recommended for K > 2
    int max_divergence_retries = 10;
    std::uint64_t seed = 0;
    Exec exec = Exec::Parallel;

    void validate() const;
};

enum class FitStatus {
    Converged,
    MaxIterations,
    DivergenceExhausted,
};

std::string to_string(FitStatus s);

struct FitResult {
    MixtureModel model;
    bool converged = false;
    FitStatus status = FitStatus::MaxIterations;
    int iterations = 0;
    std::vector<double> loglik_trajectory;  // entry 0 is the initialized model
    double final_loglik = 0.0;              // always the last trajectory entry
    double wall_time_ms = 0.0;
    int restarts_used = 1;
    int divergence_restarts = 0;
    long underflow_rows = 0;  // stability warnings raised by the E-step
    ModeBounds bounds;        // component-aligned echo; empty unless mode-constrained
};

// MOM initialization: draws mixing weights uniformly on the simplex, splits
// the sorted data into K contiguous blocks with sizes proportional to the
// weights (at least 2 points each) and moment-matches each block. Degenerate
// partitions (a zero-variance block) are re-drawn.
MixtureModel initialize(std::span<const double> data, std::size_t k, Rng& rng);

// Posterior membership probabilities under `model`. Rows where every
// component density underflows to zero are set uniform and counted in
// Responsibilities::underflow_rows.
Responsibilities responsibilities(std::span<const double> data, const MixtureModel& model,
                                  Exec exec = Exec::Serial);

// Closed-form shape/scale update for one component from weighted sums:
//   shape = (Sz * Szx) / (Sz * Szxlogx - Szlogx * Szx)
//   scale = (Sz * Szxlogx - Szlogx * Szx) / Sz^2
// so shape * scale is the weighted mean. Throws degenerate_component_error
// when the shared denominator is not positive.
std::pair<double, double> update_component(std::span<const double> data,
                                           std::span<const double> weights);

// Mixing weights: column sums divided by n.
std::vector<double> update_weights(const Responsibilities& resp);

// Observed-data log-likelihood via log-sum-exp; -inf if any point has zero
// density under every component.
double log_likelihood(std::span<const double> data, const MixtureModel& model,
                      Exec exec = Exec::Serial);

// One EM run (Procedure-1 loop). Divergence (non-finite update, degenerate
// component, or a component whose responsibility mass falls below 1e-8 * n)
// restarts the run with a fresh initialization up to
// config.max_divergence_retries times; when retries are exhausted the last
// finite state is returned with converged = false. Output components are in
// canonical order.
FitResult em_fit(std::span<const double> data, std::size_t k, const FitConfig& config);

// config.restarts independent runs with seeds config.seed + r; returns the
// converged result with the highest final log-likelihood (lowest restart
// index on ties, so the reduction is deterministic in any execution order).
// If no restart converged, the best-effort result is returned flagged
// converged = false. wall_time_ms, divergence_restarts and underflow_rows
// aggregate over all restarts.
FitResult multi_restart_fit(std::span<const double> data, std::size_t k, const FitConfig& config);

}  // namespace cfgmm
