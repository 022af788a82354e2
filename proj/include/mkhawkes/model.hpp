#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "error.hpp"
#include "params.hpp"

namespace mkhawkes {

/// Per-kernel excitation components of the intensity.
///
/// Components are tracked per (kernel, target, source) so that models whose β
/// differs across sources still evolve exactly; `lambda_components()` folds
/// them into the mK-long vector Λ_t = [λ_1(t); …; λ_K(t)].
class MarkovState {
public:
    MarkovState() = default;
    MarkovState(int dim, int kernels, std::int64_t time_ns = 0)
        : m_(dim), K_(kernels), time_ns_(time_ns),
          comp_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kernels) * dim * dim)) {}

    /// Λ_t, indexed k·m + i.
    [[nodiscard]] Eigen::VectorXd lambda_components() const {
        Eigen::VectorXd out(K_ * m_);
        for (int k = 0; k < K_; ++k)
            for (int i = 0; i < m_; ++i) out[k * m_ + i] = comp_.segment(index(k, i, 0), m_).sum();
        return out;
    }

    /// λ_{ki}(t): kernel k's contribution to target i.
    [[nodiscard]] double component(int k, int i) const { return comp_.segment(index(k, i, 0), m_).sum(); }

    /// Contribution to λ_i from type-j events through kernel k.
    [[nodiscard]] double& raw(int k, int i, int j) { return comp_[index(k, i, j)]; }
    [[nodiscard]] double raw(int k, int i, int j) const { return comp_[index(k, i, j)]; }

    [[nodiscard]] std::int64_t current_time_ns() const { return time_ns_; }
    void set_time_ns(std::int64_t t) { time_ns_ = t; }
    [[nodiscard]] int dim() const { return m_; }
    [[nodiscard]] int kernels() const { return K_; }

private:
    [[nodiscard]] Eigen::Index index(int k, int i, int j) const { return (static_cast<Eigen::Index>(k) * m_ + i) * m_ + j; }

    int m_{0};
    int K_{0};
    std::int64_t time_ns_{0};
    Eigen::VectorXd comp_;
};

/// Total intensity vector μ + JΛ_t.
[[nodiscard]] inline Eigen::VectorXd intensity_at(const ModelParams& p, const MarkovState& s) {
    Eigen::VectorXd lam = p.mu;
    for (int k = 0; k < p.kernels(); ++k)
        for (int i = 0; i < p.dim(); ++i) lam[i] += s.component(k, i);
    return lam;
}

/// Decays every component by exp(−β dt) in place. dt in seconds.
inline void decay_in_place(const ModelParams& p, MarkovState& s, double dt) {
    if (dt < 0.0 || !std::isfinite(dt)) throw InvalidParameter("advance_state requires dt >= 0");
    if (dt == 0.0) return;
    for (int k = 0; k < p.kernels(); ++k) {
        const auto& b = p.beta[static_cast<std::size_t>(k)];
        for (int i = 0; i < p.dim(); ++i)
            for (int j = 0; j < p.dim(); ++j) s.raw(k, i, j) *= std::exp(-b(i, j) * dt);
    }
}

[[nodiscard]] inline MarkovState advance_state(const ModelParams& p, MarkovState s, double dt) {
    decay_in_place(p, s, dt);
    s.set_time_ns(s.current_time_ns() + std::llround(dt * 1e9));
    return s;
}

inline void jump_in_place(const ModelParams& p, MarkovState& s, int type) {
    if (type < 0 || type >= p.dim()) throw InvalidParameter("event type outside [1, m]");
    for (int k = 0; k < p.kernels(); ++k) {
        const auto& a = p.alpha[static_cast<std::size_t>(k)];
        for (int i = 0; i < p.dim(); ++i) s.raw(k, i, type) += a(i, type);
    }
}

/// Adds α_k(:, type) to every kernel's components. `type` is 0-based.
[[nodiscard]] inline MarkovState apply_event(const ModelParams& p, MarkovState s, int type) {
    jump_in_place(p, s, type);
    return s;
}

/// State at the stationary mean: E[λ_{kij}] = α_k(i,j)/β_k(i,j) · E[λ_j].
[[nodiscard]] inline MarkovState stationary_mean_state(const ModelParams& p, const Eigen::VectorXd& mean_intensity,
                                                       std::int64_t time_ns = 0) {
    MarkovState s(p.dim(), p.kernels(), time_ns);
    for (int k = 0; k < p.kernels(); ++k) {
        const auto& a = p.alpha[static_cast<std::size_t>(k)];
        const auto& b = p.beta[static_cast<std::size_t>(k)];
        for (int i = 0; i < p.dim(); ++i)
            for (int j = 0; j < p.dim(); ++j) s.raw(k, i, j) = a(i, j) / b(i, j) * mean_intensity[j];
    }
    return s;
}

} // namespace mkhawkes
