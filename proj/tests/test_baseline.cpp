#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cfgmm/baseline.hpp"
#include "cfgmm/em.hpp"
#include "cfgmm/errors.hpp"
#include "cfgmm/simulation.hpp"
#include "cfgmm/special_functions.hpp"
#include "oracle_helpers.hpp"

using namespace cfgmm;

namespace {

MixtureModel paper_2comp() {
    MixtureModel m;
    m.components = {{0.5, 0.5, 0.3}, {8.0, 1.0 / 3.0, 0.7}};
    return m;
}

MixtureModel paper_3comp() {
    MixtureModel m;
    m.components = {{0.5, 2.0, 0.3}, {6.0, 1.0 / 3.0, 0.5}, {8.0, 1.0, 0.2}};
    return m;
}

}  // namespace

TEST_CASE("weighted_gamma_mle recovers parameters on a large sample") {
    Rng rng(51);
    const std::vector<double> x = gamma_sample(GammaParams(8.0, 1.0 / 3.0), rng, 100000);
    const std::vector<double> z(x.size(), 1.0);
    const auto [shape, scale] = weighted_gamma_mle(x, z);
    CHECK(oracle::rel_err(shape, 8.0) < 0.02);
    CHECK(oracle::rel_err(scale, 1.0 / 3.0) < 0.02);

    // a*b equals the weighted mean by construction
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    CHECK(oracle::rel_err(shape * scale, mean) < 1e-14);

    // the score residual vanishes at the root...
    double wlogx = 0.0;
    for (double v : x) wlogx += std::log(v);
    const double s = std::log(mean) - wlogx / static_cast<double>(x.size());
    CHECK(std::abs(std::log(shape) - digamma(shape) - s) <= 1e-10);

    // ...and an independent bisection finds the same root
    const double a_bisect = oracle::bisect(
        [&](double a) { return std::log(a) - digamma(a) - s; }, shape / 4.0, shape * 4.0);
    CHECK(oracle::rel_err(shape, a_bisect) < 1e-9);
}

TEST_CASE("weighted_gamma_mle rejects degenerate input") {
    const std::vector<double> flat{2.0, 2.0, 2.0};
    const std::vector<double> z{1.0, 1.0, 1.0};
    CHECK_THROWS_AS(weighted_gamma_mle(flat, z), degenerate_component_error);
    const std::vector<double> zz{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(weighted_gamma_mle(flat, zz), degenerate_component_error);
}

TEST_CASE("MLE weakly dominates the closed-form estimate in weighted likelihood") {
    Rng rng(52);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 3000, rng);
    std::mt19937_64 gen(53);
    std::uniform_real_distribution<double> uz(0.01, 1.0);
    for (int round = 0; round < 20; ++round) {
        std::vector<double> z(x.size());
        for (auto& v : z) v = uz(gen);
        const auto [a_mle, b_mle] = weighted_gamma_mle(x, z);
        const auto [a_cf, b_cf] = update_component(x, z);
        const double ll_mle = weighted_component_loglik(x, z, GammaParams(a_mle, b_mle));
        const double ll_cf = weighted_component_loglik(x, z, GammaParams(a_cf, b_cf));
        CHECK(ll_mle >= ll_cf - 1e-9);
    }
}

TEST_CASE("baseline_em_fit converges and tracks the closed-form fit") {
    Rng rng(54);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 10000, rng);
    FitConfig config;
    config.seed = 41;
    config.exec = Exec::Serial;
    const FitResult base = baseline_em_fit(x, 2, config);
    const FitResult cf = em_fit(x, 2, config);
    REQUIRE(base.converged);
    REQUIRE(cf.converged);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(oracle::rel_err(base.model.components[k].shape, cf.model.components[k].shape) < 0.10);
        CHECK(oracle::rel_err(base.model.components[k].scale, cf.model.components[k].scale) < 0.10);
        CHECK(std::abs(base.model.components[k].weight - cf.model.components[k].weight) < 0.05);
    }
}

TEST_CASE("baseline EM log-likelihood is non-decreasing") {
    Rng rng(55);
    const std::vector<double> x = generate_mixture_sample(paper_3comp(), 2000, rng);
    FitConfig config;
    config.seed = 43;
    config.exec = Exec::Serial;
    const FitResult fit = baseline_em_fit(x, 3, config);
    REQUIRE(fit.loglik_trajectory.size() >= 2);
    for (std::size_t t = 1; t < fit.loglik_trajectory.size(); ++t) {
        CHECK(fit.loglik_trajectory[t] >= fit.loglik_trajectory[t - 1] - 1e-9);
    }
}

TEST_CASE("baseline determinism") {
    Rng rng(56);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 1000, rng);
    FitConfig config;
    config.seed = 47;
    config.exec = Exec::Serial;
    const FitResult a = baseline_em_fit(x, 2, config);
    const FitResult b = baseline_em_fit(x, 2, config);
    CHECK(a.final_loglik == b.final_loglik);
    CHECK(a.loglik_trajectory == b.loglik_trajectory);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.model.components[k].shape == b.model.components[k].shape);
        CHECK(a.model.components[k].scale == b.model.components[k].scale);
    }
}
