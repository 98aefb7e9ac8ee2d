#include "cfgmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cfgmm {

MixtureModel::MixtureModel(std::vector<GammaComponent> comps) : components(std::move(comps)) {
    validate();
}

void MixtureModel::validate() const {
    if (components.empty()) {
        throw std::invalid_argument("MixtureModel: need at least one component");
    }
    double weight_sum = 0.0;
    for (const auto& c : components) {
        if (!std::isfinite(c.shape) || c.shape <= 0.0 || !std::isfinite(c.scale) || c.scale <= 0.0) {
            throw std::invalid_argument("MixtureModel: shapes and scales must be positive and finite");
        }
        if (!std::isfinite(c.weight) || c.weight < 0.0 || c.weight > 1.0) {
            throw std::invalid_argument("MixtureModel: weights must lie in [0, 1]");
        }
        weight_sum += c.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-12) {
        throw std::invalid_argument("MixtureModel: weights must sum to 1, got " +
                                    std::to_string(weight_sum));
    }
}

ModeBounds::ModeBounds(std::vector<ModeInterval> iv) : intervals(std::move(iv)) { validate(); }

void ModeBounds::validate() const {
    for (const auto& b : intervals) {
        if (std::isnan(b.lower) || std::isnan(b.upper) || !(b.lower < b.upper)) {
            throw std::invalid_argument("ModeBounds: each interval must satisfy lower < upper");
        }
        const bool lower_ok = b.lower == -std::numeric_limits<double>::infinity() || b.lower >= 0.0;
        const bool upper_ok = b.upper == std::numeric_limits<double>::infinity() || b.upper >= 0.0;
        if (!lower_ok || !upper_ok) {
            throw std::invalid_argument(
                "ModeBounds: finite boundaries must be >= 0 (gamma modes are nonnegative); use "
                "-inf to admit no-mode components");
        }
    }
}

ModeBounds ModeBounds::unbounded(std::size_t k) {
    const double inf = std::numeric_limits<double>::infinity();
    return ModeBounds(std::vector<ModeInterval>(k, ModeInterval{-inf, inf}));
}

void canonical_order(MixtureModel& model, ModeBounds* bounds) {
    const std::size_t k = model.order();
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ca = model.components[a];
        const auto& cb = model.components[b];
        if (ca.mean() != cb.mean()) return ca.mean() < cb.mean();
        return ca.weight < cb.weight;
    });
    std::vector<GammaComponent> comps(k);
    for (std::size_t i = 0; i < k; ++i) comps[i] = model.components[idx[i]];
    model.components = std::move(comps);
    if (bounds != nullptr && bounds->size() == k) {
        std::vector<ModeInterval> iv(k);
        for (std::size_t i = 0; i < k; ++i) iv[i] = bounds->intervals[idx[i]];
        bounds->intervals = std::move(iv);
    }
}

}  // namespace cfgmm
