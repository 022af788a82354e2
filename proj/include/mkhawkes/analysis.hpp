#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "error.hpp"
#include "event_stream.hpp"
#include "params.hpp"

namespace mkhawkes {

/// P(τ < u) = 1 − exp(−α(1 − e^{−βu})/β) for the first event triggered by a
/// single excitation α decaying at rate β.
[[nodiscard]] inline double arrival_probability(double alpha, double beta, double u) {
    if (!(alpha >= 0.0) || !(beta > 0.0) || !(u >= 0.0))
        throw InvalidParameter("arrival_probability needs alpha >= 0, beta > 0, u >= 0");
    if (std::isinf(u)) return -std::expm1(-alpha / beta);
    return -std::expm1(-alpha * (-std::expm1(-beta * u)) / beta);
}

/// ∫_0^∞ αu·exp(−α(1 − e^{−βu})/β − βu) du, in seconds. By default the
/// integral is returned as is (not divided by P(τ < ∞)); `normalized`
/// divides by it to give a proper conditional expectation.
[[nodiscard]] inline double expected_arrival_time(double alpha, double beta, bool normalized = false) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter("expected arrival time needs alpha > 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidParameter("expected arrival time needs beta > 0");
    auto f = [=](double u) { return alpha * u * std::exp(-alpha * (-std::expm1(-beta * u)) / beta - beta * u); };
    // The envelope αu·e^{−βu} peaks at u = 1/β; stop where it falls below 1e-16 of that peak.
    const double peak = 1.0 / (beta * std::exp(1.0));
    double upper = 1.0 / beta;
    while (upper * std::exp(-beta * upper) >= 1e-16 * peak) upper *= 1.5;
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, upper, 20, 1e-10, &err);
    return normalized ? v / arrival_probability(alpha, beta, std::numeric_limits<double>::infinity()) : v;
}

struct ResponsivenessEntry {
    int kernel{0};
    int target{0};
    int source{0};
    std::string relation;  // "self" or "cross"
    double alpha{0.0};
    double beta{0.0};
    double p_finite{0.0};
    double e_tau{0.0};
};

/// Per-kernel responsiveness of every excitation with α > 0. For the
/// symmetric bivariate profile only the (self, cross) pair of each kernel is
/// listed, matching its two free excitation parameters.
[[nodiscard]] inline std::vector<ResponsivenessEntry> responsiveness(const ModelParams& p, bool normalized = false) {
    p.validate();
    std::vector<ResponsivenessEntry> out;
    const int m = p.dim();
    const bool sym = p.profile == ConstraintProfile::symmetric_bivariate;
    for (int k = 0; k < p.kernels(); ++k)
        for (int i = 0; i < (sym ? 1 : m); ++i)
            for (int j = 0; j < m; ++j) {
                const double a = p.alpha[static_cast<std::size_t>(k)](i, j);
                const double b = p.beta[static_cast<std::size_t>(k)](i, j);
                if (!(a > 0.0)) continue;
                out.push_back({k, i, j, i == j ? "self" : "cross", a, b,
                               arrival_probability(a, b, std::numeric_limits<double>::infinity()),
                               expected_arrival_time(a, b, normalized)});
            }
    return out;
}

struct AttributionRow {
    std::size_t n_events{0};
    double share_base{0.0};
    std::vector<double> share_kernel;
};

struct AttributionReport {
    std::vector<AttributionRow> per_type;
    AttributionRow pooled;
    Eigen::MatrixXd per_event;  // n × (1 + K) when requested: [base, kernel 1, …]
};

/// Cause attribution: at each event of type i, the left-limit shares
/// μ_i/λ_i(t−) and λ_{ki}(t−)/λ_i(t−), averaged over events.
[[nodiscard]] inline AttributionReport attribute_causes(const ModelParams& p, const EventStream& s,
                                                        bool keep_per_event = false) {
    p.validate();
    s.validate();
    if (p.dim() != s.dim) throw InvalidParameter("model and stream dimensions differ");
    const int m = p.dim();
    const int K = p.kernels();
    std::vector<double> comp(static_cast<std::size_t>(K * m * m), 0.0);  // α-weighted, index (k·m+i)·m+j
    AttributionReport r;
    r.per_type.assign(static_cast<std::size_t>(m), AttributionRow{0, 0.0, std::vector<double>(static_cast<std::size_t>(K), 0.0)});
    r.pooled = AttributionRow{0, 0.0, std::vector<double>(static_cast<std::size_t>(K), 0.0)};
    if (keep_per_event) r.per_event.resize(static_cast<Eigen::Index>(s.size()), 1 + K);
    std::vector<double> share(static_cast<std::size_t>(K));
    double prev = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = s.time(n);
        const int e = s.events[n].type;
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    comp[static_cast<std::size_t>((k * m + i) * m + j)] *=
                        std::exp(-p.beta[static_cast<std::size_t>(k)](i, j) * (t - prev));
        prev = t;
        double total = p.mu[e];
        for (int k = 0; k < K; ++k) {
            double c = 0.0;
            for (int j = 0; j < m; ++j) c += comp[static_cast<std::size_t>((k * m + e) * m + j)];
            share[static_cast<std::size_t>(k)] = c;
            total += c;
        }
        const double base = p.mu[e] / total;
        auto& row = r.per_type[static_cast<std::size_t>(e)];
        ++row.n_events;
        ++r.pooled.n_events;
        row.share_base += base;
        r.pooled.share_base += base;
        if (keep_per_event) r.per_event(static_cast<Eigen::Index>(n), 0) = base;
        for (int k = 0; k < K; ++k) {
            const double v = share[static_cast<std::size_t>(k)] / total;
            row.share_kernel[static_cast<std::size_t>(k)] += v;
            r.pooled.share_kernel[static_cast<std::size_t>(k)] += v;
            if (keep_per_event) r.per_event(static_cast<Eigen::Index>(n), 1 + k) = v;
        }
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i)
                comp[static_cast<std::size_t>((k * m + i) * m + e)] += p.alpha[static_cast<std::size_t>(k)](i, e);
    }
    auto finish = [&](AttributionRow& row) {
        if (row.n_events == 0) return;
        const double n = static_cast<double>(row.n_events);
        row.share_base /= n;
        for (auto& v : row.share_kernel) v /= n;
    };
    for (auto& row : r.per_type) finish(row);
    finish(r.pooled);
    return r;
}

} // namespace mkhawkes
