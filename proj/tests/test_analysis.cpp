#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace mkhawkes;
using Catch::Approx;

namespace {

double integrand(double a, double b, double u) { return a * u * std::exp(-a * (1.0 - std::exp(-b * u)) / b - b * u); }

double trapezoid_e_tau(double a, double b) {
    return oracle::trapezoid([&](double u) { return integrand(a, b, u); }, 0.0, 60.0 / b, 4'000'000);
}

} // namespace

TEST_CASE("arrival probability", "[analysis]") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(arrival_probability(1.0, 2.0, 0.0) == 0.0);
    CHECK(arrival_probability(1.0, 2.0, inf) == Approx(1.0 - std::exp(-0.5)));
    CHECK(arrival_probability(0.0, 2.0, 5.0) == 0.0);
    double prev = 0.0;
    for (double u : {0.01, 0.1, 1.0, 10.0}) {
        const double v = arrival_probability(3.0, 1.5, u);
        CHECK(v > prev);
        CHECK(v < arrival_probability(3.0, 1.5, inf));
        prev = v;
    }
    CHECK_THROWS_AS(arrival_probability(1.0, 0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(arrival_probability(-1.0, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("expected arrival time", "[analysis]") {
    SECTION("one-kernel reference responsiveness") {
        CHECK(expected_arrival_time(318.2, 871.8) * 1e6 == Approx(319.4).epsilon(0.01));
        CHECK(expected_arrival_time(123.1, 871.8) * 1e6 == Approx(145.7).epsilon(0.01));
    }
    SECTION("trapezoid oracle") {
        for (auto [a, b] : std::vector<std::pair<double, double>>{{318.2, 871.8}, {0.5, 2.0}, {2132.0, 66.77}, {0.08, 0.0661}})
            CHECK(expected_arrival_time(a, b) == Approx(trapezoid_e_tau(a, b)).epsilon(1e-6));
    }
    SECTION("small excitation limit is alpha / beta^2") {
        CHECK(expected_arrival_time(1e-6, 3.0) == Approx(1e-6 / 9.0).epsilon(1e-5));
    }
    SECTION("scaling law") {
        const double e = expected_arrival_time(5.0, 7.0);
        for (double c : {0.01, 10.0, 1000.0}) CHECK(expected_arrival_time(c * 5.0, c * 7.0) == Approx(e / c).epsilon(1e-8));
    }
    SECTION("normalized variant") {
        const double p = arrival_probability(318.2, 871.8, std::numeric_limits<double>::infinity());
        CHECK(expected_arrival_time(318.2, 871.8, true) == Approx(expected_arrival_time(318.2, 871.8) / p));
    }
    CHECK_THROWS_AS(expected_arrival_time(0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(expected_arrival_time(1.0, -1.0), InvalidParameter);
}

TEST_CASE("responsiveness table", "[analysis]") {
    const auto p = ModelParams::symmetric_bivariate(0.17, {619.8, 2.786}, {188.2, 4.344}, {1922.0, 34.47});
    const auto rows = responsiveness(p);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].relation == "self");
    CHECK(rows[1].relation == "cross");
    CHECK(rows[3].kernel == 1);
    for (const auto& r : rows) CHECK(r.e_tau == Approx(expected_arrival_time(r.alpha, r.beta)));

    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 0.5, 0.0, 0.2, 0.3;
    b << 1.0, 1.0, 2.0, 2.0;
    CHECK(responsiveness(ModelParams::markov_row(Eigen::Vector2d(0.1, 0.1), {a}, {Eigen::Vector2d(1.0, 2.0)})).size() == 3);
}

TEST_CASE("cause attribution", "[analysis]") {
    SECTION("two-event hand computation") {
        EventStream s;
        s.dim = 1;
        s.horizon_ns = 3'000'000'000;
        s.events = {{1'000'000'000, 0}, {2'000'000'000, 0}};
        const auto r = attribute_causes(ModelParams::univariate(1.0, {0.5}, {1.0}), s, true);
        const double lam2 = 1.0 + 0.5 * std::exp(-1.0);
        CHECK(r.per_event(0, 0) == 1.0);
        CHECK(r.per_event(1, 0) == Approx(1.0 / lam2));
        CHECK(r.pooled.share_base == Approx(0.5 * (1.0 + 1.0 / lam2)));
        CHECK(r.pooled.share_kernel[0] == Approx(0.5 * (0.5 * std::exp(-1.0) / lam2)));
    }
    SECTION("shares sum to one and match direct intensities") {
        std::mt19937_64 g(3);
        const auto p = oracle::random_params(g, 2, 3);
        const auto s = oracle::random_stream(g, 2, 150, 15.0);
        const auto r = attribute_causes(p, s, true);
        for (Eigen::Index n = 0; n < r.per_event.rows(); ++n) {
            CHECK(r.per_event.row(n).sum() == Approx(1.0).epsilon(1e-12));
            const int i = s.events[static_cast<std::size_t>(n)].type;
            CHECK(r.per_event(n, 0) == Approx(p.mu[i] / oracle::direct_intensity(p, s, i, s.time(static_cast<std::size_t>(n)))).epsilon(1e-9));
        }
        double tot = r.pooled.share_base;
        for (double v : r.pooled.share_kernel) tot += v;
        CHECK(tot == Approx(1.0));
        CHECK(r.per_type[0].n_events + r.per_type[1].n_events == s.size());
    }
    SECTION("no excitation means everything is baseline") {
        std::mt19937_64 g(4);
        const auto s = oracle::random_stream(g, 2, 50, 5.0);
        const auto r = attribute_causes(ModelParams::symmetric_bivariate(0.3, {0.0}, {0.0}, {1.0}), s);
        CHECK(r.pooled.share_base == 1.0);
    }
    SECTION("simulated baseline share approaches one minus the branching ratio") {
        const auto p = ModelParams::univariate(0.5, {0.6}, {2.0});
        SimConfig cfg;
        cfg.horizon_s = 1e9;
        cfg.target_events = 20'000;
        const auto s = simulate_path(p, cfg, 9);
        CHECK(attribute_causes(p, s).pooled.share_base == Approx(0.7).margin(0.02));
    }
}
