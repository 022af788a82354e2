#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "event_stream.hpp"
#include "params.hpp"
#include "summation.hpp"

namespace mkhawkes {

// Natural (μ, α) coordinates: μ_i at i, α_k(i, j) at m + (k·m + i)·m + j.
[[nodiscard]] constexpr int natural_size(int m, int K) { return m + K * m * m; }
[[nodiscard]] constexpr int alpha_index(int m, int k, int i, int j) { return m + (k * m + i) * m + j; }

/// Recursion quantities of the log-likelihood for fixed decays.
///
/// For each target i, `a[i]` holds one row per type-i event and one column
/// per (kernel k, source j), column k·m + j:
///     a_{ijk,n} = Σ_{t_{j,l} < t_{i,n}} exp(−β_k(i,j)(t_{i,n} − t_{j,l})),
/// i.e. the left limit at the event (its own jump excluded).
/// For each source j, `b[j]` holds one row per type-j event and column k·m + i:
///     b_{ijk,n} = (1 − exp(−β_k(i,j)(T − t_{j,n}))) / β_k(i,j).
/// `b_total[i]` is Σ_n b_{ijk,n} over source events, column k·m + j.
struct SufficientStats {
    int m{0};
    int K{0};
    double T{0.0};
    std::vector<Eigen::MatrixXd> a;
    std::vector<Eigen::MatrixXd> b;
    std::vector<Eigen::VectorXd> b_total;
    std::vector<std::size_t> n_by_type;
};

namespace detail {

inline void check_dims(const std::vector<Eigen::MatrixXd>& beta, const EventStream& s) {
    if (beta.empty()) throw InvalidParameter("at least one kernel is required");
    for (const auto& b : beta) {
        if (b.rows() != s.dim || b.cols() != s.dim)
            throw InvalidParameter("decay blocks do not match the stream dimension");
        if (!b.allFinite() || (b.array() <= 0.0).any()) throw InvalidParameter("decays must be positive");
    }
}

/// Exponential decay factors exp(−β Δ) for every (k, i, j), reusing the
/// previous value when consecutive entries share a decay.
inline void decay_factors(const std::vector<Eigen::MatrixXd>& beta, double dt, std::vector<double>& out) {
    const int m = static_cast<int>(beta[0].rows());
    std::size_t idx = 0;
    double last_beta = -1.0;
    double last_val = 1.0;
    for (const auto& b : beta)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double bij = b(i, j);
                if (bij != last_beta) {
                    last_beta = bij;
                    last_val = std::exp(-bij * dt);
                }
                out[idx++] = last_val;
            }
}

} // namespace detail

/// Computes a and b by the exponential recursion over the merged stream.
/// Integration starts at the stream start; pre-sample history is ignored.
[[nodiscard]] inline SufficientStats sufficient_stats(const std::vector<Eigen::MatrixXd>& beta, const EventStream& s) {
    s.validate();
    detail::check_dims(beta, s);
    const int m = s.dim;
    const int K = static_cast<int>(beta.size());
    SufficientStats st;
    st.m = m;
    st.K = K;
    st.T = s.horizon();
    st.n_by_type = s.counts();
    for (int i = 0; i < m; ++i) {
        st.a.emplace_back(static_cast<Eigen::Index>(st.n_by_type[static_cast<std::size_t>(i)]), m * K);
        st.b.emplace_back(static_cast<Eigen::Index>(st.n_by_type[static_cast<std::size_t>(i)]), m * K);
        st.b_total.emplace_back(Eigen::VectorXd::Zero(m * K));
    }
    std::vector<double> S(static_cast<std::size_t>(K * m * m), 0.0);
    std::vector<double> f(S.size());
    std::vector<Eigen::Index> row(static_cast<std::size_t>(m), 0);
    double prev = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = s.time(n);
        const int e = s.events[n].type;
        detail::decay_factors(beta, t - prev, f);
        for (std::size_t q = 0; q < S.size(); ++q) S[q] *= f[q];
        prev = t;
        const Eigen::Index r = row[static_cast<std::size_t>(e)]++;
        auto& ae = st.a[static_cast<std::size_t>(e)];
        auto& be = st.b[static_cast<std::size_t>(e)];
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < m; ++j) ae(r, k * m + j) = S[static_cast<std::size_t>((k * m + e) * m + j)];
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i) {
                S[static_cast<std::size_t>((k * m + i) * m + e)] += 1.0;
                const double bk = beta[static_cast<std::size_t>(k)](i, e);
                be(r, k * m + i) = -std::expm1(-bk * (st.T - t)) / bk;
            }
    }
    for (int j = 0; j < m; ++j) {
        const Eigen::VectorXd col_sums = st.b[static_cast<std::size_t>(j)].colwise().sum().transpose();
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i) st.b_total[static_cast<std::size_t>(i)][k * m + j] = col_sums[k * m + i];
    }
    return st;
}

/// Log-likelihood from precomputed statistics; `beta` must match the stats.
[[nodiscard]] inline double log_likelihood(const ModelParams& p, const SufficientStats& st) {
    const int m = st.m;
    const int K = st.K;
    CompensatedSum L;
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd coef(m * K);
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < m; ++j) coef[k * m + j] = p.alpha[static_cast<std::size_t>(k)](i, j);
        const Eigen::VectorXd lam = (st.a[static_cast<std::size_t>(i)] * coef).array() + p.mu[i];
        for (Eigen::Index n = 0; n < lam.size(); ++n) {
            if (!(lam[n] > 0.0)) throw InvalidParameter("non-positive intensity at an event time");
            L += std::log(lam[n]);
        }
        L -= p.mu[i] * st.T;
        L -= st.b_total[static_cast<std::size_t>(i)].dot(coef);
    }
    return L.value();
}

/// Log-likelihood and its (μ, α) gradient at fixed β, in one recursive pass.
struct LikelihoodValue {
    double loglik{0.0};
    Eigen::VectorXd gradient;  // natural (μ, α) coordinates; empty if not requested
};

[[nodiscard]] inline LikelihoodValue evaluate_likelihood(const ModelParams& p, const EventStream& s,
                                                         bool with_gradient = true) {
    p.validate();
    s.validate();
    if (p.dim() != s.dim) throw InvalidParameter("model and stream dimensions differ");
    const int m = p.dim();
    const int K = p.kernels();
    const double T = s.horizon();
    std::vector<double> S(static_cast<std::size_t>(K * m * m), 0.0);
    std::vector<double> f(S.size());
    std::vector<CompensatedSum> grad(with_gradient ? static_cast<std::size_t>(natural_size(m, K)) : 0);
    CompensatedSum L;
    double prev = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        const double t = s.time(n);
        const int e = s.events[n].type;
        detail::decay_factors(p.beta, t - prev, f);
        for (std::size_t q = 0; q < S.size(); ++q) S[q] *= f[q];
        prev = t;
        double lam = p.mu[e];
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < m; ++j)
                lam += p.alpha[static_cast<std::size_t>(k)](e, j) * S[static_cast<std::size_t>((k * m + e) * m + j)];
        if (!(lam > 0.0)) throw InvalidParameter("non-positive intensity at an event time");
        L += std::log(lam);
        if (with_gradient) {
            grad[static_cast<std::size_t>(e)] += 1.0 / lam;
            for (int k = 0; k < K; ++k)
                for (int j = 0; j < m; ++j)
                    grad[static_cast<std::size_t>(alpha_index(m, k, e, j))] +=
                        S[static_cast<std::size_t>((k * m + e) * m + j)] / lam;
        }
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < m; ++i) {
                S[static_cast<std::size_t>((k * m + i) * m + e)] += 1.0;
                const double bk = p.beta[static_cast<std::size_t>(k)](i, e);
                const double w = -std::expm1(-bk * (T - t)) / bk;
                L -= p.alpha[static_cast<std::size_t>(k)](i, e) * w;
                if (with_gradient) grad[static_cast<std::size_t>(alpha_index(m, k, i, e))] -= w;
            }
    }
    for (int i = 0; i < m; ++i) {
        L -= p.mu[i] * T;
        if (with_gradient) grad[static_cast<std::size_t>(i)] -= T;
    }
    LikelihoodValue out;
    out.loglik = L.value();
    if (with_gradient) {
        out.gradient.resize(natural_size(m, K));
        for (std::size_t q = 0; q < grad.size(); ++q) out.gradient[static_cast<Eigen::Index>(q)] = grad[q].value();
    }
    return out;
}

/// Σ_i [Σ_n log λ_i(t_{i,n}−) − ∫₀ᵀ λ_i], without the pre-sample edge term.
[[nodiscard]] inline double log_likelihood(const ModelParams& p, const EventStream& s) {
    return evaluate_likelihood(p, s, false).loglik;
}

/// ∂L/∂μ_i = −T + Σ_n 1/λ_i;  ∂L/∂α_{ijk} = Σ_n a_{ijk,n}/λ_i − Σ_n b_{ijk,n}.
[[nodiscard]] inline Eigen::VectorXd conditional_gradient(const ModelParams& p, const EventStream& s) {
    return evaluate_likelihood(p, s, true).gradient;
}

/// Hessian in natural (μ, α) coordinates at fixed β. Each type-i event adds
/// −v vᵀ / λ_i², with v = (1 at μ_i, a_{ijk,n} at α_{ijk}); the compensator is
/// linear and contributes nothing, so the matrix is negative semidefinite.
[[nodiscard]] inline Eigen::MatrixXd conditional_hessian(const ModelParams& p, const SufficientStats& st) {
    const int m = st.m;
    const int K = st.K;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(natural_size(m, K), natural_size(m, K));
    for (int i = 0; i < m; ++i) {
        const auto& a = st.a[static_cast<std::size_t>(i)];
        Eigen::VectorXd coef(m * K);
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < m; ++j) coef[k * m + j] = p.alpha[static_cast<std::size_t>(k)](i, j);
        const Eigen::VectorXd lam = (a * coef).array() + p.mu[i];
        // Block for (μ_i, α_{i··}) in the order (μ_i, then column k·m + j).
        Eigen::MatrixXd V(a.rows(), 1 + m * K);
        V.col(0).setOnes();
        V.rightCols(m * K) = a;
        const Eigen::MatrixXd Vw = V.array().colwise() / lam.array();
        const Eigen::MatrixXd block = -(Vw.transpose() * Vw);
        std::vector<int> idx{i};
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < m; ++j) idx.push_back(alpha_index(m, k, i, j));
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < idx.size(); ++c)
                H(idx[r], idx[c]) += block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    return H;
}

[[nodiscard]] inline Eigen::MatrixXd conditional_hessian(const ModelParams& p, const EventStream& s) {
    return conditional_hessian(p, sufficient_stats(p.beta, s));
}

} // namespace mkhawkes
