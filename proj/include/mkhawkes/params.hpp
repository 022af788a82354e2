#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace mkhawkes {

/// Which decay layout (and tying of the linear parameters) a model uses.
///
///  - full:                β_{kij} free for every kernel, target and source.
///  - markov_row:          β_{ki} shared along each row (the Markov restriction).
///  - scalar_per_kernel:   one β_k per kernel.
///  - symmetric_bivariate: m = 2, μ1 = μ2, α_k = [[s, c], [c, s]], scalar β_k.
enum class ConstraintProfile { full, markov_row, scalar_per_kernel, symmetric_bivariate };

inline std::string_view to_string(ConstraintProfile p) {
    switch (p) {
    case ConstraintProfile::full: return "FULL";
    case ConstraintProfile::markov_row: return "MARKOV_ROW";
    case ConstraintProfile::scalar_per_kernel: return "SCALAR_PER_KERNEL";
    case ConstraintProfile::symmetric_bivariate: return "SYMMETRIC_BIVARIATE";
    }
    return "FULL";
}

/// Accepts both the canonical upper-case names and the short CLI spellings.
inline ConstraintProfile profile_from_string(std::string_view s) {
    if (s == "FULL" || s == "full") return ConstraintProfile::full;
    if (s == "MARKOV_ROW" || s == "markov") return ConstraintProfile::markov_row;
    if (s == "SCALAR_PER_KERNEL" || s == "scalar") return ConstraintProfile::scalar_per_kernel;
    if (s == "SYMMETRIC_BIVARIATE" || s == "sym2") return ConstraintProfile::symmetric_bivariate;
    throw InvalidParameter("unknown constraint profile '" + std::string(s) + "'");
}

/// Parameters of an m-variate, K-kernel exponential Hawkes model
///
///     λ_i(t) = μ_i + Σ_k Σ_j ∫ α_k(i,j) exp(−β_k(i,j) (t − u)) dN_j(u).
///
/// Rates are per second. `beta` is always stored expanded to m×m per kernel
/// whatever the profile; the profile only constrains which entries are tied.
struct ModelParams {
    ConstraintProfile profile{ConstraintProfile::full};
    Eigen::VectorXd mu;
    std::vector<Eigen::MatrixXd> alpha;
    std::vector<Eigen::MatrixXd> beta;

    [[nodiscard]] int dim() const { return static_cast<int>(mu.size()); }
    [[nodiscard]] int kernels() const { return static_cast<int>(alpha.size()); }

    /// Decay used to order kernels: the scalar β_k, or the largest entry.
    [[nodiscard]] double kernel_decay(int k) const { return beta[static_cast<std::size_t>(k)].maxCoeff(); }

    /// True when every row of every β_k is constant (β_{kij} = β_{ki}).
    [[nodiscard]] bool row_shared_beta() const {
        for (const auto& b : beta)
            for (int i = 0; i < b.rows(); ++i)
                if ((b.row(i).array() != b(i, 0)).any()) return false;
        return true;
    }

    void validate() const;

    static ModelParams full(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> alpha,
                            std::vector<Eigen::MatrixXd> beta);
    static ModelParams markov_row(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> alpha,
                                  const std::vector<Eigen::VectorXd>& beta_rows);
    static ModelParams scalar_per_kernel(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> alpha,
                                         const std::vector<double>& beta);
    static ModelParams symmetric_bivariate(double mu, const std::vector<double>& alpha_self,
                                           const std::vector<double>& alpha_cross,
                                           const std::vector<double>& beta);
    /// One-dimensional model (m = 1, scalar β per kernel).
    static ModelParams univariate(double mu, const std::vector<double>& alpha,
                                  const std::vector<double>& beta);
};

inline void ModelParams::validate() const {
    const int m = dim();
    const int K = kernels();
    if (m < 1) throw InvalidParameter("model dimension must be at least 1");
    if (K < 1) throw InvalidParameter("kernel count must be at least 1");
    if (static_cast<int>(beta.size()) != K)
        throw InvalidParameter("alpha and beta must have the same number of kernels");
    for (int i = 0; i < m; ++i)
        if (!(mu[i] > 0.0) || !std::isfinite(mu[i]))
            throw InvalidParameter("baseline intensities must be positive and finite");
    for (int k = 0; k < K; ++k) {
        const auto& a = alpha[static_cast<std::size_t>(k)];
        const auto& b = beta[static_cast<std::size_t>(k)];
        if (a.rows() != m || a.cols() != m || b.rows() != m || b.cols() != m)
            throw InvalidParameter("alpha and beta blocks must be m x m");
        if (!a.allFinite() || (a.array() < 0.0).any())
            throw InvalidParameter("alpha entries must be finite and non-negative");
        if (!b.allFinite() || (b.array() <= 0.0).any())
            throw InvalidParameter("beta entries must be finite and positive");
    }
    switch (profile) {
    case ConstraintProfile::full: break;
    case ConstraintProfile::markov_row:
        if (!row_shared_beta()) throw InvalidParameter("MARKOV_ROW requires beta shared along rows");
        break;
    case ConstraintProfile::scalar_per_kernel:
        for (const auto& b : beta)
            if ((b.array() != b(0, 0)).any())
                throw InvalidParameter("SCALAR_PER_KERNEL requires one beta per kernel");
        break;
    case ConstraintProfile::symmetric_bivariate:
        if (m != 2) throw InvalidParameter("SYMMETRIC_BIVARIATE requires m = 2");
        if (mu[0] != mu[1]) throw InvalidParameter("SYMMETRIC_BIVARIATE requires mu1 = mu2");
        for (int k = 0; k < K; ++k) {
            const auto& a = alpha[static_cast<std::size_t>(k)];
            const auto& b = beta[static_cast<std::size_t>(k)];
            if (a(0, 0) != a(1, 1) || a(0, 1) != a(1, 0))
                throw InvalidParameter("SYMMETRIC_BIVARIATE requires alpha = [[s, c], [c, s]]");
            if ((b.array() != b(0, 0)).any())
                throw InvalidParameter("SYMMETRIC_BIVARIATE requires one beta per kernel");
        }
        break;
    }
}

inline ModelParams ModelParams::full(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> alpha,
                                     std::vector<Eigen::MatrixXd> beta) {
    ModelParams p{ConstraintProfile::full, std::move(mu), std::move(alpha), std::move(beta)};
    p.validate();
    return p;
}

inline ModelParams ModelParams::markov_row(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> alpha,
                                           const std::vector<Eigen::VectorXd>& beta_rows) {
    const auto m = mu.size();
    std::vector<Eigen::MatrixXd> beta;
    for (const auto& r : beta_rows) {
        if (r.size() != m) throw InvalidParameter("MARKOV_ROW beta rows must have length m");
        beta.emplace_back(r.replicate(1, m));
    }
    ModelParams p{ConstraintProfile::markov_row, std::move(mu), std::move(alpha), std::move(beta)};
    p.validate();
    return p;
}

inline ModelParams ModelParams::scalar_per_kernel(Eigen::VectorXd mu, std::vector<Eigen::MatrixXd> alpha,
                                                  const std::vector<double>& beta) {
    const auto m = mu.size();
    std::vector<Eigen::MatrixXd> b;
    for (double v : beta) b.emplace_back(Eigen::MatrixXd::Constant(m, m, v));
    ModelParams p{ConstraintProfile::scalar_per_kernel, std::move(mu), std::move(alpha), std::move(b)};
    p.validate();
    return p;
}

inline ModelParams ModelParams::symmetric_bivariate(double mu, const std::vector<double>& alpha_self,
                                                    const std::vector<double>& alpha_cross,
                                                    const std::vector<double>& beta) {
    if (alpha_self.size() != beta.size() || alpha_cross.size() != beta.size())
        throw InvalidParameter("SYMMETRIC_BIVARIATE needs one (alpha_s, alpha_c, beta) triple per kernel");
    ModelParams p;
    p.profile = ConstraintProfile::symmetric_bivariate;
    p.mu = Eigen::Vector2d(mu, mu);
    for (std::size_t k = 0; k < beta.size(); ++k) {
        Eigen::Matrix2d a;
        a << alpha_self[k], alpha_cross[k], alpha_cross[k], alpha_self[k];
        p.alpha.emplace_back(a);
        p.beta.emplace_back(Eigen::MatrixXd::Constant(2, 2, beta[k]));
    }
    p.validate();
    return p;
}

inline ModelParams ModelParams::univariate(double mu, const std::vector<double>& alpha,
                                           const std::vector<double>& beta) {
    if (alpha.size() != beta.size()) throw InvalidParameter("alpha and beta lengths differ");
    ModelParams p;
    p.profile = ConstraintProfile::scalar_per_kernel;
    p.mu = Eigen::VectorXd::Constant(1, mu);
    for (std::size_t k = 0; k < beta.size(); ++k) {
        p.alpha.emplace_back(Eigen::MatrixXd::Constant(1, 1, alpha[k]));
        p.beta.emplace_back(Eigen::MatrixXd::Constant(1, 1, beta[k]));
    }
    p.validate();
    return p;
}

/// Σ_k α_k ⊘ β_k (elementwise). Its spectral radius is the branching ratio.
[[nodiscard]] inline Eigen::MatrixXd branching_matrix(const ModelParams& p) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p.dim(), p.dim());
    for (int k = 0; k < p.kernels(); ++k)
        s.array() += p.alpha[static_cast<std::size_t>(k)].array() / p.beta[static_cast<std::size_t>(k)].array();
    return s;
}

[[nodiscard]] inline double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

[[nodiscard]] inline double spectral_radius(const ModelParams& p) { return spectral_radius(branching_matrix(p)); }

[[nodiscard]] inline bool is_stationary(const ModelParams& p) { return spectral_radius(p) < 1.0; }

/// Reorders kernels by strictly decreasing decay, fixing label switching.
/// Stable, so kernels with equal decay keep their relative order.
[[nodiscard]] inline ModelParams canonicalize(const ModelParams& p) {
    std::vector<int> order(static_cast<std::size_t>(p.kernels()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return p.kernel_decay(a) > p.kernel_decay(b); });
    ModelParams out{p.profile, p.mu, {}, {}};
    for (int k : order) {
        out.alpha.push_back(p.alpha[static_cast<std::size_t>(k)]);
        out.beta.push_back(p.beta[static_cast<std::size_t>(k)]);
    }
    return out;
}

} // namespace mkhawkes
