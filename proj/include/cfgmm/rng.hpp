#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cfgmm/special_functions.hpp"

// Seeded random streams. Uniform, normal and gamma variates are generated
// from raw mt19937_64 output with fixed bit manipulation, so sequences are
// identical across platforms and standard library versions. A stream is
// never shared between workers; derive one per worker with mix_seed.

namespace cfgmm {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via the Marsaglia polar method (second value discarded).
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

  private:
    std::mt19937_64 gen_;
};

// Stream-splitting helper: hashes (seed, index) into a fresh seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// One draw from the shape-scale gamma. Marsaglia-Tsang squeeze/rejection
// for shape >= 1; shape < 1 uses the boost identity (draw at shape+1,
// multiply by U^(1/shape)).
double gamma_draw(const GammaParams& p, Rng& rng);

// n i.i.d. draws; deterministic given the stream state.
std::vector<double> gamma_sample(const GammaParams& p, Rng& rng, std::size_t n);

// Uniform draw from the K-simplex (symmetric Dirichlet(1)).
std::vector<double> simplex_draw(std::size_t k, Rng& rng);

}  // namespace cfgmm
