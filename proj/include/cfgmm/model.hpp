#pragma once

#include <cstddef>
#include <vector>

namespace cfgmm {

struct GammaComponent {
    double shape;
    double scale;
    double weight;

    double mean() const { return shape * scale; }
};

// Ordered set of K gamma components with mixing weights. Fitting routines
// emit components in canonical order: ascending component mean a*b, ties
// broken by ascending weight.
struct MixtureModel {
    std::vector<GammaComponent> components;

    MixtureModel() = default;
    explicit MixtureModel(std::vector<GammaComponent> comps);

    std::size_t order() const { return components.size(); }

    // Throws std::invalid_argument on non-finite parameters, weights
    // outside [0,1] or weights not summing to 1 within 1e-12.
    void validate() const;
};

// n x K matrix of posterior membership probabilities, row-major.
struct Responsibilities {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> z;

    // rows where every component log-density was -inf and the uniform
    // fallback was applied
    long underflow_rows = 0;

    double operator()(std::size_t i, std::size_t k) const { return z[i * cols + k]; }
    double& operator()(std::size_t i, std::size_t k) { return z[i * cols + k]; }
};

// Per-component open interval for the component mode. lower may be -inf,
// upper may be +inf; finite bounds must be >= 0 (gamma modes are
// nonnegative, so a finite negative boundary is unattainable).
struct ModeInterval {
    double lower;
    double upper;
};

struct ModeBounds {
    std::vector<ModeInterval> intervals;

    ModeBounds() = default;
    explicit ModeBounds(std::vector<ModeInterval> iv);

    std::size_t size() const { return intervals.size(); }

    // Throws std::invalid_argument for empty intervals, l >= u, or finite
    // negative boundaries.
    void validate() const;

    static ModeBounds unbounded(std::size_t k);
};

// Sorts components into canonical order. For constrained fits the bounds
// travel with their components, preserving the component-bound pairing.
void canonical_order(MixtureModel& model, ModeBounds* bounds = nullptr);

}  // namespace cfgmm
