#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace mkhawkes;
using Catch::Approx;

TEST_CASE("Poisson residuals are scaled gaps", "[diagnostics]") {
    const auto p = ModelParams::symmetric_bivariate(0.4, {0.0}, {0.0}, {1.0});
    std::mt19937_64 g(1);
    const auto s = oracle::random_stream(g, 2, 60, 30.0);
    const auto r = residuals(p, s);
    std::vector<double> last(2, -1.0);
    std::vector<std::size_t> idx(2, 0);
    for (std::size_t n = 0; n < s.size(); ++n) {
        const int i = s.events[n].type;
        if (last[i] >= 0.0) CHECK(r.per_type[i][idx[i]++] == Approx(0.4 * (s.time(n) - last[i])).epsilon(1e-12));
        last[i] = s.time(n);
    }
    CHECK(r.compensator_total[0] == Approx(0.4 * 30.0));
    CHECK(r.pooled.size() == s.size() - 2);
}

TEST_CASE("residuals match direct compensator integrals", "[diagnostics]") {
    std::mt19937_64 g(2);
    for (int rep = 0; rep < 5; ++rep) {
        const auto p = oracle::random_params(g, 2, 2);
        const auto s = oracle::random_stream(g, 2, 120, 12.0);
        const auto r = residuals(p, s);
        std::vector<double> last(2, -1.0);
        std::vector<std::size_t> idx(2, 0);
        for (std::size_t n = 0; n < s.size(); ++n) {
            const int i = s.events[n].type;
            if (last[i] >= 0.0) {
                const double v = r.per_type[i][idx[i]++];
                CHECK(v > 0.0);
                CHECK(v == Approx(oracle::direct_compensator(p, s, i, last[i], s.time(n))).epsilon(1e-9));
            }
            last[i] = s.time(n);
        }
        for (int i = 0; i < 2; ++i)
            CHECK(r.compensator_total[i] == Approx(oracle::direct_compensator(p, s, i, 0.0, s.horizon())).epsilon(1e-9));
    }
}

TEST_CASE("compensator equals the event count at the MLE", "[diagnostics]") {
    const auto truth = ModelParams::univariate(0.3, {0.6}, {2.0});
    SimConfig cfg;
    cfg.horizon_s = 3000.0;
    const auto s = simulate_path(truth, cfg, 8);
    ProfileOptions opt;
    opt.compute_se = false;
    const auto fit = fit_profile(s, 1, ConstraintProfile::scalar_per_kernel, opt);
    const auto r = residuals(fit.params_hat, s);
    CHECK(std::abs(r.compensator_total[0] - static_cast<double>(s.size())) / static_cast<double>(s.size()) < 1e-3);
}

TEST_CASE("true-model residuals are unit exponential", "[diagnostics]") {
    const auto p = ModelParams::symmetric_bivariate(0.2, {3.0, 0.3}, {1.0, 0.2}, {10.0, 1.0});
    SimConfig cfg;
    cfg.horizon_s = 1e9;
    cfg.target_events = 10'000;
    const auto s = simulate_path(p, cfg, 4);
    const auto r = residuals(p, s);
    CHECK(r.pooled.size() >= 9'990);
    CHECK(ks_exponential(r.pooled).p_value > 0.01);
}

TEST_CASE("Q-Q table", "[diagnostics]") {
    const auto one = qq_exponential({std::log(2.0)});
    REQUIRE(one.size() == 1);
    CHECK(one[0].empirical == Approx(0.693).margin(1e-3));
    CHECK(one[0].theoretical == Approx(0.693).margin(1e-3));
    CHECK_THROWS_AS(qq_exponential({}), InvalidParameter);

    Rng rng(5);
    std::vector<double> x(10'000);
    for (auto& v : x) v = rng.exponential(1.0);
    const auto qq = qq_exponential(x);
    // The 99th-percentile order statistic of 10⁴ draws has standard error ≈ 0.1.
    CHECK(qq_max_deviation(qq, 0.98) < 0.3);
    for (std::size_t i = 1; i < qq.size(); ++i) CHECK(qq[i].theoretical > qq[i - 1].theoretical);
}

TEST_CASE("Kolmogorov-Smirnov test", "[diagnostics]") {
    CHECK(kolmogorov_survival(1.358) == Approx(0.05).margin(1e-3));
    CHECK(kolmogorov_survival(1.628) == Approx(0.01).margin(1e-3));
    CHECK(kolmogorov_survival(0.0) == 1.0);
    Rng rng(6);
    std::vector<double> good(5000), bad(5000);
    for (auto& v : good) v = rng.exponential(1.0);
    for (auto& v : bad) v = rng.exponential(1.3);
    CHECK(ks_exponential(good).p_value > 0.01);
    CHECK(ks_exponential(bad).p_value < 1e-6);
    const auto single = ks_exponential({std::log(2.0)});
    CHECK(single.statistic == Approx(0.5));
}

TEST_CASE("local maximum counting", "[diagnostics]") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(count_local_maxima({5}, {1, 2, 3, 2, 1}) == 1);
    CHECK(count_local_maxima({5}, {1, 3, 1, 3, 1}) == 2);
    CHECK(count_local_maxima({5}, {1, 2, 2, 2, 1}) == 1);
    CHECK(count_local_maxima({5}, {1, 2, 2 + 5e-7, 2, 1}) == 1);
    CHECK(count_local_maxima({5}, {1, 2, 3, 4, 5}) == 1);
    CHECK(count_local_maxima({5}, {5, 4, 3, 4, 5}) == 2);
    CHECK(count_local_maxima({5}, {1, 3, nan, 3, 1}) == 2);
    CHECK(count_local_maxima({3}, {nan, nan, nan}) == 0);
    CHECK(count_local_maxima({3, 3}, {0, 0, 0, 0, 1, 0, 0, 0, 0}) == 1);
    CHECK(count_local_maxima({3, 3}, {2, 0, 0, 0, 1, 0, 0, 0, 2}) == 2);
    // A plateau touching a higher neighbour is not a maximum.
    CHECK(count_local_maxima({4}, {1, 1, 1, 2}) == 1);
    // Edge maxima are dropped on request.
    CHECK(count_local_maxima({5}, {5, 4, 3, 4, 5}, 1e-6, false) == 0);
    CHECK(count_local_maxima({5}, {5, 4, 6, 4, 5}, 1e-6, false) == 1);
    CHECK(count_local_maxima({5}, {1, 2, 2, 2, 2}, 1e-6, false) == 0);
    CHECK(count_local_maxima({3, 3}, {0, 0, 0, 0, 1, 0, 0, 0, 0}, 1e-6, false) == 1);
    CHECK(count_local_maxima({3, 3}, {2, 0, 0, 0, 1, 0, 0, 0, 2}, 1e-6, false) == 0);
}

TEST_CASE("profile scans", "[diagnostics]") {
    SECTION("strong excitation with many events has one maximum") {
        const auto truth = ModelParams::univariate(0.5, {0.9}, {1.0});
        SimConfig cfg;
        cfg.horizon_s = 1e9;
        cfg.target_events = 5000;
        const auto s = simulate_path(truth, cfg, 12);
        const std::vector<std::vector<double>> axes{log_space(0.01, 100.0, 61)};
        const auto r = scan_conditional_max(s, 1, ConstraintProfile::scalar_per_kernel, axes);
        CHECK(r.local_maxima == 1);
        CHECK(r.interior_maxima == 1);
        // Deterministic, and the count does not depend on the axis parameterisation.
        const auto again = scan_conditional_max(s, 1, ConstraintProfile::scalar_per_kernel, axes);
        for (std::size_t q = 0; q < r.points.size(); ++q) CHECK(again.points[q].lstar == r.points[q].lstar);
        std::vector<double> vals;
        for (const auto& pt : r.points) vals.push_back(pt.lstar);
        CHECK(count_local_maxima({vals.size()}, vals) == r.local_maxima);
    }
    SECTION("two-kernel scan skips unordered cells") {
        const auto truth = ModelParams::symmetric_bivariate(0.3, {4.0, 0.2}, {1.0, 0.1}, {20.0, 0.5});
        SimConfig cfg;
        cfg.horizon_s = 1500.0;
        const auto s = simulate_path(truth, cfg, 13);
        const auto ax = log_space(0.1, 100.0, 8);
        const auto r = scan_conditional_max(s, 2, ConstraintProfile::symmetric_bivariate, {ax, ax});
        std::size_t ok = 0;
        for (const auto& pt : r.points) ok += pt.ok ? 1 : 0;
        CHECK(ok == 28);
        CHECK(r.local_maxima >= 1);
        CHECK_THROWS_AS(scan_conditional_max(s, 2, ConstraintProfile::symmetric_bivariate, {ax}), InvalidParameter);
    }
    SECTION("small samples can be non-concave") {
        int multi = 0;
        for (int rep = 0; rep < 30; ++rep) {
            SimConfig cfg;
            cfg.horizon_s = 1e9;
            cfg.target_events = 10;
            const auto s = simulate_path(ModelParams::univariate(1.0, {0.15}, {1.0}), cfg, derive_seed(400, rep));
            const auto r = scan_conditional_max(s, 1, ConstraintProfile::scalar_per_kernel, {log_space(0.01, 100.0, 61)});
            multi += r.local_maxima > 1 ? 1 : 0;
        }
        CHECK(multi > 0);
    }
}

TEST_CASE("success-rate experiment", "[diagnostics]") {
    const auto rows = success_rate_experiment({0.9}, {100}, 4, 7);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].reps == 4);
    CHECK(rows[0].successes <= 4);
    const auto again = success_rate_experiment({0.9}, {100}, 4, 7);
    CHECK(again[0].successes == rows[0].successes);
    CHECK_THROWS_AS(success_rate_experiment({1.2}, {100}, 4, 7), InvalidParameter);
}
