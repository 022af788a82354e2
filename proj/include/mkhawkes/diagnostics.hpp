#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "error.hpp"
#include "estimate.hpp"
#include "event_stream.hpp"
#include "likelihood.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace mkhawkes {

// ---------------------------------------------------------------------------
// Time-rescaling residuals
// ---------------------------------------------------------------------------

struct ResidualSet {
    std::vector<std::vector<double>> per_type;  // ∫ λ_i between consecutive type-i events
    std::vector<double> pooled;
    std::vector<double> compensator_total;  // ∫_0^T λ_i
};

/// Compensator increments between consecutive same-type events, using the
/// closed-form integral of each exponential component between merged event
/// times.
[[nodiscard]] inline ResidualSet residuals(const ModelParams& p, const EventStream& s) {
    p.validate();
    s.validate();
    if (p.dim() != s.dim) throw InvalidParameter("model and stream dimensions differ");
    const int m = p.dim();
    const int K = p.kernels();
    std::vector<double> S(static_cast<std::size_t>(K * m * m), 0.0);
    std::vector<double> since_last(static_cast<std::size_t>(m), 0.0);
    std::vector<double> total(static_cast<std::size_t>(m), 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    ResidualSet out;
    out.per_type.resize(static_cast<std::size_t>(m));

    auto integrate = [&](double dt) {
        for (int i = 0; i < m; ++i) {
            double inc = p.mu[i] * dt;
            for (int k = 0; k < K; ++k)
                for (int j = 0; j < m; ++j) {
                    const double b = p.beta[static_cast<std::size_t>(k)](i, j);
                    const double a = p.alpha[static_cast<std::size_t>(k)](i, j);
                    inc += a * S[static_cast<std::size_t>((k * m + i) * m + j)] * (-std::expm1(-b * dt)) / b;
                }
            since_last[static_cast<std::size_t>(i)] += inc;
            total[static_cast<std::size_t>(i)] += inc;
        }
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    S[static_cast<std::size_t>((k * m + i) * m + j)] *= std::exp(-p.beta[static_cast<std::size_t>(k)](i, j) * dt);
    };

    double prev = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = s.time(n);
        const int e = s.events[n].type;
        integrate(t - prev);
        prev = t;
        auto& acc = since_last[static_cast<std::size_t>(e)];
        if (seen[static_cast<std::size_t>(e)]) out.per_type[static_cast<std::size_t>(e)].push_back(acc);
        seen[static_cast<std::size_t>(e)] = true;
        acc = 0.0;
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i) S[static_cast<std::size_t>((k * m + i) * m + e)] += 1.0;
    }
    integrate(s.horizon() - prev);
    out.compensator_total = total;
    for (const auto& r : out.per_type) out.pooled.insert(out.pooled.end(), r.begin(), r.end());
    return out;
}

struct QQPoint {
    double empirical{0.0};
    double theoretical{0.0};
};

/// Sorted sample against Exp(1) quantiles −log(1 − (i − 0.5)/n).
[[nodiscard]] inline std::vector<QQPoint> qq_exponential(std::vector<double> sample) {
    if (sample.empty()) throw InvalidParameter("empty residual set");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    std::vector<QQPoint> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i)
        out[i] = {sample[i], -std::log1p(-(static_cast<double>(i) + 0.5) / n)};
    return out;
}

/// Largest |empirical − theoretical| over the central `fraction` of points.
[[nodiscard]] inline double qq_max_deviation(const std::vector<QQPoint>& qq, double fraction = 1.0) {
    const auto n = qq.size();
    const auto cut = static_cast<std::size_t>(std::floor(0.5 * (1.0 - fraction) * static_cast<double>(n)));
    double d = 0.0;
    for (std::size_t i = cut; i + cut < n; ++i) d = std::max(d, std::abs(qq[i].empirical - qq[i].theoretical));
    return d;
}

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
    std::size_t n{0};
};

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
[[nodiscard]] inline double kolmogorov_survival(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test against Exp(1), with Stephens' small-sample correction.
[[nodiscard]] inline KsResult ks_exponential(std::vector<double> sample) {
    if (sample.empty()) throw InvalidParameter("empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = -std::expm1(-std::max(sample[i], 0.0));
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d), sample.size()};
}

// ---------------------------------------------------------------------------
// Profile-likelihood scans
// ---------------------------------------------------------------------------

struct ScanResult {
    std::vector<std::vector<double>> axes;
    std::vector<ProfilePoint> points;  // row-major over axes; skipped points have ok = false
    int local_maxima{0};
    int interior_maxima{0};  // maxima not touching the outer faces of the grid
};

/// Counts local maxima of a surface on a rectangular grid (row-major values).
/// Neighbours are all cells within one index step on every axis. Cells whose
/// values differ by at most `tol` are merged into plateaus first; a plateau is
/// a maximum when every valid neighbour outside it is strictly lower. Invalid
/// cells (NaN) are treated as absent. With `include_edges` false, a plateau
/// touching the first or last index of any axis is not counted: there the
/// surface may simply keep rising beyond the scanned range.
[[nodiscard]] inline int count_local_maxima(const std::vector<std::size_t>& shape, const std::vector<double>& values,
                                            double tol = 1e-6, bool include_edges = true) {
    const std::size_t total = values.size();
    const std::size_t d = shape.size();
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t a = d; a-- > 1;) stride[a - 1] = stride[a] * shape[a];
    auto coords = [&](std::size_t idx) {
        std::vector<std::size_t> c(d);
        for (std::size_t a = 0; a < d; ++a) {
            c[a] = idx / stride[a];
            idx %= stride[a];
        }
        return c;
    };
    auto neighbours = [&](std::size_t idx) {
        std::vector<std::size_t> out;
        const auto c = coords(idx);
        std::vector<int> off(d, -1);
        for (;;) {
            bool zero = true, inside = true;
            std::size_t nb = 0;
            for (std::size_t a = 0; a < d; ++a) {
                if (off[a] != 0) zero = false;
                const auto v = static_cast<long long>(c[a]) + off[a];
                if (v < 0 || v >= static_cast<long long>(shape[a])) inside = false;
                else nb += static_cast<std::size_t>(v) * stride[a];
            }
            if (!zero && inside) out.push_back(nb);
            std::size_t a = 0;
            while (a < d && ++off[a] > 1) off[a++] = -1;
            if (a == d) break;
        }
        return out;
    };
    auto valid = [&](std::size_t q) { return std::isfinite(values[q]); };

    std::vector<std::size_t> parent(total);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t q = 0; q < total; ++q) {
        if (!valid(q)) continue;
        for (auto nb : neighbours(q))
            if (valid(nb) && std::abs(values[nb] - values[q]) <= tol) parent[find(nb)] = find(q);
    }
    std::vector<char> is_max(total, 1);
    for (std::size_t q = 0; q < total; ++q) {
        if (!valid(q)) continue;
        const auto root = find(q);
        if (!include_edges) {
            const auto c = coords(q);
            for (std::size_t a = 0; a < d; ++a)
                if (c[a] == 0 || c[a] + 1 == shape[a]) is_max[root] = 0;
        }
        for (auto nb : neighbours(q))
            if (valid(nb) && find(nb) != root && !(values[nb] < values[q])) is_max[root] = 0;
    }
    int count = 0;
    for (std::size_t q = 0; q < total; ++q)
        if (valid(q) && find(q) == q && is_max[q]) ++count;
    return count;
}

/// L*(β) over the product grid of `axes` (one axis per free decay). With
/// `ordered`, tuples violating β_1 > β_2 > … are skipped (label switching
/// would otherwise mirror every maximum).
[[nodiscard]] inline ScanResult scan_conditional_max(const EventStream& s, int K, ConstraintProfile profile,
                                                     const std::vector<std::vector<double>>& axes, bool ordered = true,
                                                     unsigned threads = 1, double tol = 1e-6) {
    s.validate();
    const FreeLayout layout(profile, s.dim, K);
    if (static_cast<int>(axes.size()) != layout.n_beta())
        throw InvalidParameter("scan needs one grid axis per free decay (" + std::to_string(layout.n_beta()) + ")");
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (const auto& ax : axes) {
        if (ax.empty()) throw InvalidParameter("empty decay grid");
        for (double b : ax)
            if (!(b > 0.0)) throw InvalidParameter("grid decays must be positive");
        shape.push_back(ax.size());
        total *= ax.size();
    }
    ScanResult r;
    r.axes = axes;
    r.points.resize(total);
    const bool check_order = ordered && layout.scalar_beta();
    parallel_for(total, threads, [&](std::size_t q) {
        Eigen::VectorXd b(static_cast<Eigen::Index>(axes.size()));
        std::size_t rem = q;
        for (std::size_t a = axes.size(); a-- > 0;) {
            b[static_cast<Eigen::Index>(a)] = axes[a][rem % shape[a]];
            rem /= shape[a];
        }
        ProfilePoint& pt = r.points[q];
        pt.beta = b;
        for (Eigen::Index a = 1; check_order && a < b.size(); ++a)
            if (!(b[a] < b[a - 1])) {
                pt.note = "skipped (unordered)";
                return;
            }
        try {
            const auto cf = maximize_conditional(layout, s, b);
            pt.lstar = cf.lstar;
            pt.ok = cf.converged && std::isfinite(cf.lstar);
            if (!pt.ok) pt.note = cf.message;
        } catch (const Error& e) {
            pt.note = e.what();
        }
    });
    std::vector<double> vals(total);
    for (std::size_t q = 0; q < total; ++q)
        vals[q] = r.points[q].ok ? r.points[q].lstar : std::numeric_limits<double>::quiet_NaN();
    r.local_maxima = count_local_maxima(shape, vals, tol);
    r.interior_maxima = count_local_maxima(shape, vals, tol, false);
    return r;
}

// ---------------------------------------------------------------------------
// Success-rate experiment
// ---------------------------------------------------------------------------

struct SuccessRateRow {
    double branching{0.0};
    std::size_t n{0};
    int successes{0};
    int reps{0};
    [[nodiscard]] double rate() const { return reps > 0 ? static_cast<double>(successes) / reps : 0.0; }
};

struct SuccessRateOptions {
    double beta_min{0.01};
    double beta_max{100.0};
    int points_per_decade{15};
    unsigned threads{1};
};

/// Univariate paths (μ = 1, β = 1, α = branching) of exactly n events,
/// started from an empty history so that the data follow the model the
/// likelihood conditions on. A replication succeeds when the scanned L*(β)
/// has exactly one interior local maximum; a maximum on the edge of the decay
/// range only says that L* is still rising where the scan stops.
[[nodiscard]] inline std::vector<SuccessRateRow> success_rate_experiment(const std::vector<double>& branching_list,
                                                                         const std::vector<std::size_t>& size_list,
                                                                         int reps, std::uint64_t seed,
                                                                         const SuccessRateOptions& opt = {}) {
    if (reps < 1) throw InvalidParameter("reps must be at least 1");
    if (!(opt.beta_max > opt.beta_min && opt.beta_min > 0.0)) throw InvalidParameter("invalid decay range");
    const int npts = static_cast<int>(std::lround(std::log10(opt.beta_max / opt.beta_min) * opt.points_per_decade)) + 1;
    const std::vector<std::vector<double>> axes{log_space(opt.beta_min, opt.beta_max, npts)};

    std::vector<SuccessRateRow> rows;
    for (double br : branching_list)
        for (auto n : size_list) {
            if (!(br >= 0.0 && br < 1.0)) throw InvalidParameter("branching ratio must lie in [0, 1)");
            if (n < 2) throw InvalidParameter("sample size must be at least 2");
            rows.push_back({br, n, 0, reps});
        }
    const std::size_t jobs = rows.size() * static_cast<std::size_t>(reps);
    std::vector<char> success(jobs, 0);
    parallel_for(jobs, opt.threads, [&](std::size_t q) {
        const auto& row = rows[q / static_cast<std::size_t>(reps)];
        const ModelParams p = ModelParams::univariate(1.0, {row.branching}, {1.0});
        SimConfig cfg;
        cfg.horizon_s = 1e12;
        cfg.target_events = row.n;
        cfg.init = InitMode::zero_with_burn_in;
        cfg.burn_in_s = 0.0;
        const EventStream s = simulate_path(p, cfg, derive_seed(seed, q));
        const auto scan = scan_conditional_max(s, 1, ConstraintProfile::scalar_per_kernel, axes);
        success[q] = scan.interior_maxima == 1 ? 1 : 0;
    });
    for (std::size_t q = 0; q < jobs; ++q) rows[q / static_cast<std::size_t>(reps)].successes += success[q];
    return rows;
}

} // namespace mkhawkes
