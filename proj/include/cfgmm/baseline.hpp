#pragma once

#include <span>
#include <utility>

#include "cfgmm/em.hpp"
#include "cfgmm/model.hpp"
#include "cfgmm/special_functions.hpp"

// The comparison estimator: classical gamma mixture EM whose M-step solves
// the weighted gamma score equation numerically per component. The EM
// driver (initialization, convergence criterion, divergence handling,
// restarts) is shared with the closed-form fit, so the M-step is the only
// difference between the two methods. As in the numerical-MLE packages this
// stands in for, every root-finding iteration re-evaluates the weighted
// score with a full pass over the data.

namespace cfgmm {

// Weighted gamma MLE: solves ln a - psi(a) = ln(wmean) - wmean(log x) for
// the shape by safeguarded Newton (derivative 1/a - psi'(a), bisection
// fallback, iteration cap 100, residual tolerance 1e-10), then
// scale = wmean / shape. Initial guess (3 - s + sqrt((s-3)^2 + 24 s))/(12 s).
// Throws degenerate_component_error when s <= 0 (all weighted mass on one
// value) and solve_failure when no bracket is found.
std::pair<double, double> weighted_gamma_mle(std::span<const double> data,
                                             std::span<const double> weights);

// Weighted single-component gamma log-likelihood sum z_i * ln f(x_i | p);
// the quantity the M-step maximizes.
double weighted_component_loglik(std::span<const double> data, std::span<const double> weights,
                                 const GammaParams& p);

// EM with the numerical M-step; contract identical to em_fit.
FitResult baseline_em_fit(std::span<const double> data, std::size_t k, const FitConfig& config);

// Restart wrapper, as multi_restart_fit.
FitResult baseline_multi_restart_fit(std::span<const double> data, std::size_t k,
                                     const FitConfig& config);

}  // namespace cfgmm
