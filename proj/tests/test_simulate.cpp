#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace mkhawkes;
using Catch::Approx;

TEST_CASE("Poisson counts", "[simulate]") {
    const auto p = ModelParams::symmetric_bivariate(0.2, {0.0}, {0.0}, {1.0});
    SimConfig cfg;
    cfg.horizon_s = 1000.0;
    cfg.n_paths = 1000;
    cfg.seed = 1;
    const auto s = simulate_ensemble(p, cfg);
    // Each type is Poisson(200): the ensemble mean has SE sqrt(200/1000).
    const double se = std::sqrt(200.0 / 1000.0);
    CHECK(std::abs(s.mean_N[0] - 200.0) < 3.0 * se);
    CHECK(std::abs(s.mean_N[1] - 200.0) < 3.0 * se);
}

TEST_CASE("Poisson inter-arrival times are exponential", "[simulate]") {
    const auto p = ModelParams::symmetric_bivariate(0.7, {0.0}, {0.0}, {1.0});
    SimConfig cfg;
    cfg.horizon_s = 1e9;
    cfg.target_events = 10'000;
    const auto s = simulate_path(p, cfg, 99);
    REQUIRE(s.size() == 10'000);
    std::vector<double> scaled;
    for (std::size_t n = 1; n < s.size(); ++n) scaled.push_back((s.time(n) - s.time(n - 1)) * 1.4);
    CHECK(ks_exponential(scaled).p_value > 0.01);
}

TEST_CASE("degenerate horizon", "[simulate]") {
    const auto p = ModelParams::univariate(1.0, {0.5}, {1.0});
    SimConfig cfg;
    cfg.horizon_s = 0.0;
    const auto s = simulate_path(p, cfg, 3);
    CHECK(s.empty());
    CHECK(s.horizon_ns == 0);
}

TEST_CASE("determinism and thread invariance", "[simulate]") {
    const auto p = ModelParams::symmetric_bivariate(0.3, {2.0, 0.2}, {1.0, 0.1}, {10.0, 1.0});
    SimConfig cfg;
    cfg.horizon_s = 200.0;
    cfg.seed = 42;
    const auto a = simulate_path(p, cfg, 7);
    const auto b = simulate_path(p, cfg, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a.events[n].t_ns == b.events[n].t_ns);
        CHECK(a.events[n].type == b.events[n].type);
    }
    CHECK_NOTHROW(a.validate());
    CHECK(simulate_path(p, cfg, 8).size() != a.size());

    cfg.n_paths = 16;
    const auto s1 = simulate_ensemble(p, cfg);
    cfg.threads = 4;
    const auto s4 = simulate_ensemble(p, cfg);
    CHECK(s1.mean_NN == s4.mean_NN);
    CHECK(s1.se_N == s4.se_N);
}

TEST_CASE("single-path ensemble equals the path", "[simulate]") {
    const auto p = ModelParams::univariate(0.5, {0.5}, {2.0});
    SimConfig cfg;
    cfg.horizon_s = 300.0;
    cfg.seed = 5;
    const auto s = simulate_ensemble(p, cfg);
    const auto path = simulate_path(p, cfg, derive_seed(5, 0));
    CHECK(s.mean_N[0] == static_cast<double>(path.size()));
    CHECK(s.mean_NN(0, 0) == static_cast<double>(path.size() * path.size()));
    CHECK(std::isnan(s.se_N[0]));
}

TEST_CASE("runaway guard and stationarity", "[simulate]") {
    const auto p = ModelParams::univariate(1.0, {1.2}, {1.0});
    SimConfig cfg;
    cfg.horizon_s = 1000.0;
    CHECK_THROWS_AS(simulate_path(p, cfg, 1), NonStationary);
    cfg.init = InitMode::zero_with_burn_in;
    cfg.max_events = 1000;
    std::vector<std::string> warnings;
    set_warning_handler([&](std::string_view w) { warnings.emplace_back(w); });
    CHECK_THROWS_AS(simulate_path(p, cfg, 1), RunawaySimulation);
    set_warning_handler(nullptr);
    CHECK(!warnings.empty());
}

TEST_CASE("burn-in start reports only t >= 0", "[simulate]") {
    const auto p = ModelParams::univariate(1.0, {0.5}, {1.0});
    SimConfig cfg;
    cfg.horizon_s = 100.0;
    cfg.init = InitMode::zero_with_burn_in;
    cfg.burn_in_s = 50.0;
    const auto s = simulate_path(p, cfg, 11);
    REQUIRE(!s.empty());
    CHECK(s.events.front().t_ns >= 0);
    CHECK(s.events.back().t_ns <= s.horizon_ns);
}

TEST_CASE("ensemble moments agree with closed form", "[simulate]") {
    const auto p = ModelParams::symmetric_bivariate(0.3, {3.0, 0.3}, {1.5, 0.2}, {10.0, 1.0});
    SimConfig cfg;
    cfg.horizon_s = 200.0;
    cfg.n_paths = 400;
    cfg.seed = 17;
    const auto s = simulate_ensemble(p, cfg);
    const auto r = compute_moments(p);
    const auto E = r.E_NN(cfg.horizon_s);
    CHECK(std::abs(s.mean_N[0] - r.E_N(cfg.horizon_s)[0]) < 4.0 * s.se_N[0]);
    CHECK(std::abs(s.mean_NN(0, 0) - E(0, 0)) < 4.0 * s.se_NN(0, 0));
    CHECK(std::abs(s.mean_NN(0, 1) - E(0, 1)) < 4.0 * s.se_NN(0, 1));
}
