#pragma once

#include <span>

#include "cfgmm/em.hpp"
#include "cfgmm/model.hpp"

// Mode-constrained closed-form gamma mixture EM. After every closed-form
// M-step each component's mode (shape-1)*scale is checked against its
// interval; a violating component is projected onto the nearest finite
// boundary m by solving the constrained score equation for the scale and
// setting shape = m/scale + 1, so the projected mode equals m exactly.

namespace cfgmm {

struct ProjectionResult {
    double shape;
    double scale;
    bool was_projected;
};

// Constrained score residual at scale b for boundary mode m (the -1/b^2
// prefactor is dropped; it never vanishes for b > 0):
//   g(b) = Sz*(m + b - m*ln b - m*psi(m/b + 1)) + m*Szlogx - Szx
// g is strictly increasing in b, so a sign change brackets the unique root.
double constrained_score(const ComponentSums& sums, double mode, double scale);

// Solves g(b) = 0 for b > 0. Newton iterations run in theta = ln b to keep
// positivity; steps that leave the sign-change bracket, or a degenerate
// derivative, fall back to bisection. The bracket is grown geometrically
// from the initial guess within [1e-12, 1e12] * (weighted mean); failure to
// find a sign change there throws solve_failure. m = 0 reduces the residual
// to Sz*b - Szx, so the weighted mean is returned after one step.
double newton_solve_b(std::span<const double> data, std::span<const double> weights, double mode,
                      double initial_guess = 0.0);

// Sum-form of newton_solve_b used inside the EM loop.
double newton_solve_b_from_sums(const ComponentSums& sums, double mode, double initial_guess);

// Checks the component mode against `interval` and projects onto the
// nearest finite boundary when it falls outside. A -inf mode (shape < 1)
// satisfies any interval with lower bound -inf and is otherwise projected
// to the finite lower bound.
ProjectionResult check_and_project(std::span<const double> data, std::span<const double> weights,
                                   double shape, double scale, const ModeInterval& interval);

// Sum-form of check_and_project used inside the EM loop.
ProjectionResult check_and_project_from_sums(const ComponentSums& sums, double shape, double scale,
                                             const ModeInterval& interval);

// em_fit with the projection applied to every component after each M-step.
// With all-infinite bounds this is identical to em_fit for the same seed.
// The result's components satisfy gamma_mode in [lower, upper] (closed at a
// projected boundary) and FitResult::bounds echoes the intervals in output
// component order.
FitResult constrained_em_fit(std::span<const double> data, std::size_t k, const ModeBounds& bounds,
                             const FitConfig& config);

// Restart wrapper, as multi_restart_fit.
FitResult constrained_multi_restart_fit(std::span<const double> data, std::size_t k,
                                        const ModeBounds& bounds, const FitConfig& config);

}  // namespace cfgmm
