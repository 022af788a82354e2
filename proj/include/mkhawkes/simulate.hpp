#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "event_stream.hpp"
#include "log.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace mkhawkes {

enum class InitMode { stationary_mean, zero_with_burn_in };

struct SimConfig {
    double horizon_s{1000.0};
    std::size_t n_paths{1};
    std::uint64_t seed{0};
    InitMode init{InitMode::stationary_mean};
    double burn_in_s{0.0};
    std::size_t max_events{50'000'000};
    /// When set, the path stops at this many events and the horizon becomes
    /// the time of the last one (horizon_s is then only an upper bound).
    std::optional<std::size_t> target_events{};
    unsigned threads{1};

    void validate() const {
        if (!(horizon_s >= 0.0)) throw InvalidParameter("simulation horizon must be non-negative");
        if (n_paths < 1) throw InvalidParameter("n_paths must be at least 1");
        if (max_events < 1) throw InvalidParameter("max_events must be positive");
        if (init == InitMode::zero_with_burn_in && !(burn_in_s >= 0.0))
            throw InvalidParameter("burn-in must be non-negative");
    }
};

namespace detail {

inline MarkovState initial_state(const ModelParams& p, const SimConfig& cfg) {
    if (cfg.init == InitMode::stationary_mean) {
        const auto first = stationary_intensity(p);
        return stationary_mean_state(p, first[0]);
    }
    return MarkovState(p.dim(), p.kernels());
}

} // namespace detail

/// Ogata thinning. Between events every component decays, so the total
/// intensity just after the last update bounds the intensity until the next
/// candidate; the bound is refreshed after every candidate, accepted or not.
/// `on_event(t_seconds, type)` is called for each accepted event with t ≥ 0.
/// Returns the end time of the simulated window in seconds.
template <class OnEvent>
double simulate_events(const ModelParams& p, const SimConfig& cfg, std::uint64_t path_seed, OnEvent&& on_event) {
    p.validate();
    cfg.validate();
    const double rho = spectral_radius(p);
    if (!(rho < 1.0)) {
        warn("simulating a non-stationary model (spectral radius " + std::to_string(rho) + ")");
        if (cfg.init == InitMode::stationary_mean)
            throw NonStationary("stationary-mean initialisation needs spectral radius < 1");
    }
    const int m = p.dim();
    Rng rng(path_seed);
    MarkovState s = detail::initial_state(p, cfg);
    double t = cfg.init == InitMode::zero_with_burn_in ? -cfg.burn_in_s : 0.0;
    const double T = cfg.horizon_s;
    std::size_t accepted = 0;
    Eigen::VectorXd lam(m);

    for (;;) {
        const double bound = intensity_at(p, s).sum();
        const double wait = rng.exponential(bound);
        if (t + wait > T) break;
        decay_in_place(p, s, wait);
        t += wait;
        lam = intensity_at(p, s);
        const double total = lam.sum();
        if (rng.uniform() * bound > total) continue;
        double pick = rng.uniform() * total;
        int type = 0;
        while (type < m - 1 && pick >= lam[type]) pick -= lam[type++];
        jump_in_place(p, s, type);
        if (t < 0.0) continue;
        if (++accepted > cfg.max_events)
            throw RunawaySimulation("simulation exceeded max_events = " + std::to_string(cfg.max_events) +
                                    " (near-critical or explosive parameters)");
        on_event(t, type);
        if (cfg.target_events && accepted >= *cfg.target_events) return t;
    }
    return T;
}

/// One path on [0, T] as an event stream with nanosecond timestamps.
[[nodiscard]] inline EventStream simulate_path(const ModelParams& p, const SimConfig& cfg, std::uint64_t path_seed) {
    EventStream out;
    out.dim = p.dim();
    out.start_ns = 0;
    std::int64_t prev = -1;
    const double end = simulate_events(p, cfg, path_seed, [&](double t, int type) {
        std::int64_t ns = std::llround(t * 1e9);
        if (ns <= prev) ns = prev + 1;
        prev = ns;
        out.events.push_back({ns, type});
    });
    out.horizon_ns = std::max<std::int64_t>(std::llround(end * 1e9), prev < 0 ? 0 : prev);
    return out;
}

/// Sample moments of the counts N_T across an ensemble of paths.
struct EnsembleSummary {
    std::size_t n_paths{0};
    double horizon_s{0.0};
    Eigen::VectorXd mean_N;
    Eigen::VectorXd se_N;
    Eigen::MatrixXd mean_NN;
    Eigen::MatrixXd se_NN;
};

/// Running sums that merge associatively across workers.
struct EnsembleAccumulator {
    std::size_t n{0};
    Eigen::VectorXd s1;
    Eigen::MatrixXd s2;
    Eigen::MatrixXd s4;

    explicit EnsembleAccumulator(int m = 0)
        : s1(Eigen::VectorXd::Zero(m)), s2(Eigen::MatrixXd::Zero(m, m)), s4(Eigen::MatrixXd::Zero(m, m)) {}

    void add(const Eigen::VectorXd& counts) {
        ++n;
        s1 += counts;
        const Eigen::MatrixXd outer = counts * counts.transpose();
        s2 += outer;
        s4.array() += outer.array().square();
    }

    void merge(const EnsembleAccumulator& o) {
        n += o.n;
        s1 += o.s1;
        s2 += o.s2;
        s4 += o.s4;
    }

    [[nodiscard]] EnsembleSummary summary(double horizon) const {
        EnsembleSummary r;
        const double nn = static_cast<double>(n);
        r.n_paths = n;
        r.horizon_s = horizon;
        r.mean_N = s1 / nn;
        r.mean_NN = s2 / nn;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (n < 2) {
            r.se_N = Eigen::VectorXd::Constant(s1.size(), nan);
            r.se_NN = Eigen::MatrixXd::Constant(s2.rows(), s2.cols(), nan);
            return r;
        }
        const Eigen::VectorXd var_N = (s2.diagonal() - s1.cwiseAbs2() / nn) / (nn - 1.0);
        r.se_N = (var_N / nn).cwiseMax(0.0).cwiseSqrt();
        const Eigen::MatrixXd var_NN = ((s4.array() - s2.array().square() / nn) / (nn - 1.0)).matrix();
        r.se_NN = (var_NN / nn).cwiseMax(0.0).cwiseSqrt();
        return r;
    }
};

/// Runs cfg.n_paths paths with seeds derive_seed(cfg.seed, path). The summary
/// is bitwise identical for any thread count.
[[nodiscard]] inline EnsembleSummary simulate_ensemble(const ModelParams& p, const SimConfig& cfg) {
    cfg.validate();
    const int m = p.dim();
    std::vector<Eigen::VectorXd> counts(cfg.n_paths, Eigen::VectorXd::Zero(m));
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t path) {
        Eigen::VectorXd& c = counts[path];
        simulate_events(p, cfg, derive_seed(cfg.seed, path), [&](double, int type) { c[type] += 1.0; });
    });
    EnsembleAccumulator acc(m);
    for (const auto& c : counts) acc.add(c);
    return acc.summary(cfg.horizon_s);
}

} // namespace mkhawkes
