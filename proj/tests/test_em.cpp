#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "cfgmm/em.hpp"
#include "cfgmm/errors.hpp"
#include "cfgmm/simulation.hpp"
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

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("initialize: K=1 equals the MOM estimate of all data") {
    Rng data_rng(3);
    const std::vector<double> x = gamma_sample(GammaParams(2.0, 3.0), data_rng, 500);
    Rng rng(10);
    const MixtureModel model = initialize(x, 1, rng);
    REQUIRE(model.order() == 1);
    const GammaParams mom = mom_estimate(x);
    // summation order differs (the partition works on sorted data)
    CHECK(oracle::rel_err(model.components[0].shape, mom.shape) < 1e-13);
    CHECK(oracle::rel_err(model.components[0].scale, mom.scale) < 1e-13);
    CHECK(model.components[0].weight == 1.0);
}

TEST_CASE("initialize: deterministic per seed and structurally valid") {
    Rng data_rng(4);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 400, data_rng);
    Rng a(11);
    Rng b(11);
    const MixtureModel ma = initialize(x, 2, a);
    const MixtureModel mb = initialize(x, 2, b);
    REQUIRE(ma.order() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(ma.components[k].shape > 0.0);
        CHECK(std::isfinite(ma.components[k].shape));
        CHECK(ma.components[k].scale > 0.0);
        CHECK(std::isfinite(ma.components[k].scale));
        CHECK(ma.components[k].shape == mb.components[k].shape);
        CHECK(ma.components[k].scale == mb.components[k].scale);
        CHECK(ma.components[k].weight == mb.components[k].weight);
    }
    ma.validate();
}

TEST_CASE("initialize input validation") {
    Rng rng(1);
    const std::vector<double> tiny{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(initialize(tiny, 2, rng), std::invalid_argument);
    const std::vector<double> bad{1.0, -2.0, 3.0, 4.0};
    CHECK_THROWS_AS(initialize(bad, 2, rng), std::invalid_argument);
}

TEST_CASE("responsibilities: single component and symmetric components") {
    const std::vector<double> x{0.5, 1.0, 4.0};

    MixtureModel one;
    one.components = {{2.0, 1.0, 1.0}};
    const Responsibilities r1 = responsibilities(x, one);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r1(i, 0) == 1.0);

    MixtureModel twin;
    twin.components = {{2.0, 1.0, 0.5}, {2.0, 1.0, 0.5}};
    const Responsibilities r2 = responsibilities(x, twin);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r2(i, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(r2(i, 1) == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("responsibilities: equal densities split evenly at x=1") {
    // f(1 | a=1, b=1) = f(1 | a=2, b=1) = exp(-1)
    MixtureModel m;
    m.components = {{1.0, 1.0, 0.5}, {2.0, 1.0, 0.5}};
    const std::vector<double> x{1.0};
    const Responsibilities r = responsibilities(x, m);
    CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("update_component: frozen {1,2,3} values from the reference sums") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> z{1.0, 1.0, 1.0};
    const auto [shape, scale] = update_component(x, z);
    // direct evaluation of the estimator sums: denominator reduces to 3 ln 3,
    // so shape = 6 / ln 3 and scale = ln 3 / 3
    const double want_shape = 6.0 / std::log(3.0);
    const double want_scale = std::log(3.0) / 3.0;
    CHECK(std::abs(shape - 5.4614353597610243617) < 1e-12);
    CHECK(std::abs(scale - 0.36620409622270323047) < 1e-13);
    CHECK(oracle::rel_err(shape, want_shape) < 1e-14);
    CHECK(oracle::rel_err(scale, want_scale) < 1e-14);
    // long-double reference route
    const auto ref = oracle::closed_form_reference(x, z);
    CHECK(oracle::rel_err(shape, static_cast<double>(ref.shape)) < 1e-14);
    CHECK(oracle::rel_err(scale, static_cast<double>(ref.scale)) < 1e-14);
    // weighted mean identity
    CHECK(oracle::rel_err(shape * scale, 2.0) < 1e-14);
}

TEST_CASE("update_component: weighted-mean identity on random weights") {
    Rng rng(21);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 2000, rng);
    std::mt19937_64 gen(22);
    std::uniform_real_distribution<double> uz(0.0, 1.0);
    std::vector<double> z(x.size());
    for (auto& v : z) v = uz(gen);
    const auto [shape, scale] = update_component(x, z);
    double sz = 0.0;
    double szx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sz += z[i];
        szx += z[i] * x[i];
    }
    CHECK(oracle::rel_err(shape * scale, szx / sz) < 1e-10);

    const auto ref = oracle::closed_form_reference(x, z);
    CHECK(oracle::rel_err(shape, static_cast<double>(ref.shape)) < 1e-10);
    CHECK(oracle::rel_err(scale, static_cast<double>(ref.scale)) < 1e-10);
}

TEST_CASE("update_component: consistency on a large gamma sample") {
    Rng rng(23);
    const std::vector<double> x = gamma_sample(GammaParams(8.0, 1.0 / 3.0), rng, 10000);
    const std::vector<double> z(x.size(), 1.0);
    const auto [shape, scale] = update_component(x, z);
    CHECK(oracle::rel_err(shape, 8.0) < 0.05);
    CHECK(oracle::rel_err(scale, 1.0 / 3.0) < 0.05);
}

TEST_CASE("update_component: degenerate input throws") {
    const std::vector<double> x{2.0, 2.0, 2.0};
    const std::vector<double> z{1.0, 1.0, 1.0};
    CHECK_THROWS_AS(update_component(x, z), degenerate_component_error);
    const std::vector<double> zz{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(update_component(x, zz), degenerate_component_error);
}

TEST_CASE("update_weights") {
    Responsibilities r;
    r.rows = 100;
    r.cols = 2;
    r.z.assign(200, 0.0);
    for (std::size_t i = 0; i < 100; ++i) {
        r(i, 0) = i < 30 ? 1.0 : 0.0;
        r(i, 1) = i < 30 ? 0.0 : 1.0;
    }
    const std::vector<double> w = update_weights(r);
    CHECK(w[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.7).epsilon(1e-15));

    Responsibilities u;
    u.rows = 4;
    u.cols = 4;
    u.z.assign(16, 0.25);
    for (double v : update_weights(u)) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

    Responsibilities single;
    single.rows = 5;
    single.cols = 1;
    single.z.assign(5, 1.0);
    CHECK(update_weights(single) == std::vector<double>{1.0});
}

TEST_CASE("log_likelihood spot checks") {
    MixtureModel exp1;
    exp1.components = {{1.0, 1.0, 1.0}};
    const std::vector<double> x{0.3, 1.2, 2.5};
    CHECK(log_likelihood(x, exp1) == doctest::Approx(-(0.3 + 1.2 + 2.5)).epsilon(1e-14));

    // duplicating every point doubles the value
    MixtureModel m = paper_2comp();
    std::vector<double> doubled = x;
    doubled.insert(doubled.end(), x.begin(), x.end());
    CHECK(log_likelihood(doubled, m) ==
          doctest::Approx(2.0 * log_likelihood(x, m)).epsilon(1e-13));
}

TEST_CASE("em_fit: K=1 recovers the single-pass estimate in few iterations") {
    Rng rng(31);
    const std::vector<double> x = gamma_sample(GammaParams(2.0, 3.0), rng, 10000);
    FitConfig config;
    config.seed = 5;
    config.exec = Exec::Serial;
    const FitResult fit = em_fit(x, 1, config);
    CHECK(fit.converged);
    CHECK(fit.iterations <= 3);

    const std::vector<double> ones(x.size(), 1.0);
    const auto [shape, scale] = update_component(x, ones);
    CHECK(oracle::rel_err(fit.model.components[0].shape, shape) < 1e-12);
    CHECK(oracle::rel_err(fit.model.components[0].scale, scale) < 1e-12);
    CHECK(oracle::rel_err(shape, 2.0) < 0.05);
    CHECK(oracle::rel_err(scale, 3.0) < 0.05);
}

TEST_CASE("em_fit: recovers the 2-component design at n=10000") {
    Rng rng(32);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 10000, rng);
    FitConfig config;
    config.seed = 7;
    config.exec = Exec::Serial;
    const FitResult fit = em_fit(x, 2, config);
    CHECK(fit.converged);
    CHECK(fit.status == FitStatus::Converged);
    REQUIRE(fit.model.order() == 2);
    // canonical order puts the low-mean component first
    CHECK(fit.model.components[0].mean() < fit.model.components[1].mean());
    CHECK(oracle::rel_err(fit.model.components[0].shape, 0.5) < 0.15);
    CHECK(oracle::rel_err(fit.model.components[1].shape, 8.0) < 0.15);
    CHECK(std::abs(fit.model.components[0].weight - 0.3) < 0.05);
    CHECK(fit.final_loglik == fit.loglik_trajectory.back());
}

TEST_CASE("em_fit invariants: weights, mean preservation, fixed point") {
    Rng rng(33);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 5000, rng);
    FitConfig config;
    config.seed = 9;
    config.exec = Exec::Serial;
    const FitResult fit = em_fit(x, 2, config);
    REQUIRE(fit.converged);

    double wsum = 0.0;
    double mean_model = 0.0;
    for (const auto& c : fit.model.components) {
        wsum += c.weight;
        mean_model += c.weight * c.mean();
    }
    CHECK(std::abs(wsum - 1.0) < 1e-12);
    // the output model came from its last M-step, so the mixture mean equals
    // the sample mean
    CHECK(oracle::rel_err(mean_model, sample_mean(x)) < 1e-10);

    // weighted-mean identity for one further E+M cycle
    const Responsibilities resp = responsibilities(x, fit.model);
    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> col(x.size());
        double sz = 0.0;
        double szx = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            col[i] = resp(i, k);
            sz += col[i];
            szx += col[i] * x[i];
        }
        const auto [shape, scale] = update_component(x, col);
        CHECK(oracle::rel_err(shape * scale, szx / sz) < 1e-10);
    }

    // refit from the fitted parameters moves the log-likelihood less than
    // 10 * eps * n
    const std::vector<double> w = update_weights(resp);
    MixtureModel once;
    once.components.resize(2);
    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> col(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) col[i] = resp(i, k);
        const auto [shape, scale] = update_component(x, col);
        once.components[k] = {shape, scale, w[k]};
    }
    const double before = log_likelihood(x, fit.model);
    const double after = log_likelihood(x, once);
    CHECK(std::abs(after - before) <
          10.0 * config.tolerance * static_cast<double>(x.size()));
}

TEST_CASE("em_fit determinism: identical config gives bitwise-identical results") {
    Rng rng(34);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 2000, rng);
    FitConfig config;
    config.seed = 11;
    config.exec = Exec::Serial;
    const FitResult a = em_fit(x, 2, config);
    config.exec = Exec::Parallel;  // kernel backends agree bitwise
    const FitResult b = em_fit(x, 2, config);
    REQUIRE(a.model.order() == b.model.order());
    for (std::size_t k = 0; k < a.model.order(); ++k) {
        CHECK(a.model.components[k].shape == b.model.components[k].shape);
        CHECK(a.model.components[k].scale == b.model.components[k].scale);
        CHECK(a.model.components[k].weight == b.model.components[k].weight);
    }
    CHECK(a.loglik_trajectory == b.loglik_trajectory);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("em_fit scale equivariance") {
    Rng rng(35);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 3000, rng);
    const double c = 7.3;
    std::vector<double> scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = c * x[i];

    FitConfig config;
    config.seed = 13;
    config.exec = Exec::Serial;
    const FitResult base = em_fit(x, 2, config);
    const FitResult scaled_fit = em_fit(scaled, 2, config);
    REQUIRE(base.converged);
    REQUIRE(scaled_fit.converged);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(oracle::rel_err(scaled_fit.model.components[k].shape,
                              base.model.components[k].shape) < 1e-8);
        CHECK(oracle::rel_err(scaled_fit.model.components[k].weight,
                              base.model.components[k].weight) < 1e-8);
        CHECK(oracle::rel_err(scaled_fit.model.components[k].scale,
                              c * base.model.components[k].scale) < 1e-8);
    }
}

TEST_CASE("multi_restart_fit: restarts=1 equals em_fit; selection picks the maximum") {
    Rng rng(36);
    const std::vector<double> x = generate_mixture_sample(paper_3comp(), 1500, rng);
    FitConfig config;
    config.seed = 17;
    config.restarts = 1;
    config.exec = Exec::Serial;
    const FitResult single = em_fit(x, 3, config);
    const FitResult multi1 = multi_restart_fit(x, 3, config);
    CHECK(single.final_loglik == multi1.final_loglik);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(single.model.components[k].shape == multi1.model.components[k].shape);
    }

    config.restarts = 5;
    const FitResult multi = multi_restart_fit(x, 3, config);
    CHECK(multi.restarts_used == 5);
    // the selected likelihood dominates every individual converged restart
    for (int r = 0; r < 5; ++r) {
        FitConfig one = config;
        one.restarts = 1;
        one.seed = config.seed + static_cast<std::uint64_t>(r);
        const FitResult fr = em_fit(x, 3, one);
        if (fr.converged) CHECK(multi.final_loglik >= fr.final_loglik);
    }
}

TEST_CASE("multi_restart_fit aggregates wall time over restarts") {
    Rng rng(37);
    const std::vector<double> x = generate_mixture_sample(paper_2comp(), 500, rng);
    FitConfig config;
    config.seed = 19;
    config.restarts = 3;
    config.exec = Exec::Serial;
    const FitResult fit = multi_restart_fit(x, 2, config);
    CHECK(fit.restarts_used == 3);
    CHECK(fit.wall_time_ms > 0.0);
}
