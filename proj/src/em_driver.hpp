#pragma once

#include <functional>
#include <span>
#include <utility>

#include "cfgmm/em.hpp"
#include "cfgmm/kernels.hpp"
#include "cfgmm/model.hpp"

// Shared EM driver. The three estimators (closed-form, mode-constrained
// closed-form, numerical-MLE baseline) differ only in the per-component
// M-step update; initialization, convergence control, divergence recovery
// and restart selection are identical so timing comparisons isolate the
// M-step.

namespace cfgmm::detail {

struct UpdateInputs {
    std::span<const double> x;
    std::span<const double> logx;
    const Responsibilities& resp;
    const ComponentSums& sums;  // weighted sums of this component
    std::size_t comp;
    double prev_shape;
    double prev_scale;
};

// Returns {shape, scale}; may throw degenerate_component_error or
// solve_failure, both handled as divergence.
using ComponentUpdate = std::function<std::pair<double, double>(const UpdateInputs&)>;

// The closed-form estimator on weighted sums (shape*scale = weighted mean);
// throws degenerate_component_error on a non-positive denominator.
std::pair<double, double> closed_form_update(const ComponentSums& sums);

// One full EM run with divergence retries. `bounds` is carried through for
// the result echo and kept aligned with components during canonical
// ordering; it does not affect the driver itself (constrained updates
// capture their own bounds).
FitResult run_em(std::span<const double> data, std::size_t k, const FitConfig& config,
                 const ComponentUpdate& update, const ModeBounds* bounds);

// Restart wrapper around run_em; see multi_restart_fit.
FitResult run_multi_restart(std::span<const double> data, std::size_t k, const FitConfig& config,
                            const ComponentUpdate& update, const ModeBounds* bounds);

// Initialization on data already sorted ascending.
MixtureModel initialize_sorted(std::span<const double> sorted, std::size_t k, Rng& rng);

}  // namespace cfgmm::detail
