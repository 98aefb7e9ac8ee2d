#include "cfgmm/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace cfgmm {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the combined state
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double gamma_draw(const GammaParams& p, Rng& rng) {
    double boost = 1.0;
    double a = p.shape;
    if (a < 1.0) {
        boost = std::pow(rng.uniform(), 1.0 / a);
        a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            const double r = d * v * boost * p.scale;
            if (r > 0.0) return r;  // resample on underflow to keep support open
        }
    }
}

std::vector<double> gamma_sample(const GammaParams& p, Rng& rng, std::size_t n) {
    if (n < 1) throw std::invalid_argument("gamma_sample: n must be >= 1");
    std::vector<double> out(n);
    for (auto& v : out) v = gamma_draw(p, rng);
    return out;
}

std::vector<double> simplex_draw(std::size_t k, Rng& rng) {
    if (k < 1) throw std::invalid_argument("simplex_draw: k must be >= 1");
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& v : w) {
        v = -std::log(rng.uniform());
        total += v;
    }
    for (auto& v : w) v /= total;
    return w;
}

}  // namespace cfgmm
