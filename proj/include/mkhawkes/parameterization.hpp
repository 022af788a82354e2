#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "error.hpp"
#include "likelihood.hpp"
#include "params.hpp"

namespace mkhawkes {

/// Free-parameter layout of a constraint profile.
///
/// The free vector is [linear part | decay part]. The linear part θ maps onto
/// natural (μ, α) coordinates through a 0/1 tying map (every natural
/// coordinate is a copy of exactly one θ entry), so the conditional
/// log-likelihood stays concave in θ. The decay part maps onto the expanded β.
class FreeLayout {
public:
    FreeLayout(ConstraintProfile profile, int m, int K) : profile_(profile), m_(m), K_(K) {
        if (m < 1 || K < 1) throw InvalidParameter("layout needs m >= 1 and K >= 1");
        if (profile == ConstraintProfile::symmetric_bivariate && m != 2)
            throw InvalidParameter("SYMMETRIC_BIVARIATE requires m = 2");
        tie_.assign(static_cast<std::size_t>(natural_size(m, K)), 0);
        if (profile == ConstraintProfile::symmetric_bivariate) {
            n_lin_ = 1 + 2 * K;
            names_.push_back("mu");
            tie_[0] = tie_[1] = 0;
            for (int k = 0; k < K; ++k) {
                names_.push_back("alpha_" + std::to_string(k + 1) + "s");
                names_.push_back("alpha_" + std::to_string(k + 1) + "c");
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        tie_[static_cast<std::size_t>(alpha_index(2, k, i, j))] = 1 + 2 * k + (i == j ? 0 : 1);
            }
        } else {
            n_lin_ = natural_size(m, K);
            for (int q = 0; q < n_lin_; ++q) tie_[static_cast<std::size_t>(q)] = q;
            for (int i = 0; i < m; ++i) names_.push_back("mu_" + std::to_string(i + 1));
            for (int k = 0; k < K; ++k)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j)
                        names_.push_back("alpha_" + std::to_string(k + 1) + "_" + std::to_string(i + 1) +
                                         std::to_string(j + 1));
        }
        switch (profile) {
        case ConstraintProfile::full:
            n_beta_ = K * m * m;
            for (int k = 0; k < K; ++k)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j)
                        names_.push_back("beta_" + std::to_string(k + 1) + "_" + std::to_string(i + 1) +
                                         std::to_string(j + 1));
            break;
        case ConstraintProfile::markov_row:
            n_beta_ = K * m;
            for (int k = 0; k < K; ++k)
                for (int i = 0; i < m; ++i)
                    names_.push_back("beta_" + std::to_string(k + 1) + "_" + std::to_string(i + 1));
            break;
        case ConstraintProfile::scalar_per_kernel:
        case ConstraintProfile::symmetric_bivariate:
            n_beta_ = K;
            for (int k = 0; k < K; ++k) names_.push_back("beta_" + std::to_string(k + 1));
            break;
        }
    }

    [[nodiscard]] ConstraintProfile profile() const { return profile_; }
    [[nodiscard]] int dim() const { return m_; }
    [[nodiscard]] int kernels() const { return K_; }
    [[nodiscard]] int n_linear() const { return n_lin_; }
    [[nodiscard]] int n_beta() const { return n_beta_; }
    [[nodiscard]] int n_free() const { return n_lin_ + n_beta_; }
    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
    [[nodiscard]] int tie(int natural) const { return tie_[static_cast<std::size_t>(natural)]; }

    /// True when linear entry q is a baseline intensity.
    [[nodiscard]] bool is_mu(int q) const {
        for (int i = 0; i < m_; ++i)
            if (tie(i) == q) return true;
        return false;
    }

    /// Decay layout where one free β governs every kernel entry (scalar or sym2).
    [[nodiscard]] bool scalar_beta() const { return n_beta_ == K_; }

    [[nodiscard]] std::vector<Eigen::MatrixXd> expand_beta(const Eigen::VectorXd& b) const {
        std::vector<Eigen::MatrixXd> out;
        for (int k = 0; k < K_; ++k) {
            Eigen::MatrixXd mk(m_, m_);
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) mk(i, j) = b[beta_slot(k, i, j)];
            out.push_back(mk);
        }
        return out;
    }

    /// Free β index governing β_k(i, j).
    [[nodiscard]] int beta_slot(int k, int i, int j) const {
        switch (profile_) {
        case ConstraintProfile::full: return (k * m_ + i) * m_ + j;
        case ConstraintProfile::markov_row: return k * m_ + i;
        default: return k;
        }
    }

    [[nodiscard]] Eigen::VectorXd linear_of(const ModelParams& p) const {
        Eigen::VectorXd th = Eigen::VectorXd::Zero(n_lin_);
        const Eigen::VectorXd x = natural_of(p);
        for (int q = 0; q < x.size(); ++q) th[tie(q)] = x[q];
        return th;
    }

    [[nodiscard]] Eigen::VectorXd beta_of(const ModelParams& p) const {
        Eigen::VectorXd b(n_beta_);
        for (int k = 0; k < K_; ++k)
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) b[beta_slot(k, i, j)] = p.beta[static_cast<std::size_t>(k)](i, j);
        return b;
    }

    [[nodiscard]] Eigen::VectorXd free_of(const ModelParams& p) const {
        Eigen::VectorXd v(n_free());
        v << linear_of(p), beta_of(p);
        return v;
    }

    [[nodiscard]] ModelParams assemble(const Eigen::VectorXd& lin, const Eigen::VectorXd& beta) const {
        ModelParams p;
        p.profile = profile_;
        p.mu.resize(m_);
        for (int i = 0; i < m_; ++i) p.mu[i] = lin[tie(i)];
        for (int k = 0; k < K_; ++k) {
            Eigen::MatrixXd a(m_, m_);
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) a(i, j) = lin[tie(alpha_index(m_, k, i, j))];
            p.alpha.push_back(a);
        }
        p.beta = expand_beta(beta);
        return p;
    }

    [[nodiscard]] ModelParams assemble(const Eigen::VectorXd& free) const {
        return assemble(free.head(n_lin_), free.tail(n_beta_));
    }

    /// Pᵀ g: gradient in natural coordinates folded onto the linear free part.
    [[nodiscard]] Eigen::VectorXd fold_gradient(const Eigen::VectorXd& natural) const {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n_lin_);
        for (int q = 0; q < natural.size(); ++q) g[tie(q)] += natural[q];
        return g;
    }

    [[nodiscard]] Eigen::MatrixXd fold_hessian(const Eigen::MatrixXd& natural) const {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n_lin_, n_lin_);
        for (int r = 0; r < natural.rows(); ++r)
            for (int c = 0; c < natural.cols(); ++c) H(tie(r), tie(c)) += natural(r, c);
        return H;
    }

    /// Reshapes a vector over free parameters into ModelParams shape; tied
    /// copies receive the same value.
    [[nodiscard]] ModelParams shape_like(const Eigen::VectorXd& free_values) const {
        ModelParams p;
        p.profile = profile_;
        p.mu.resize(m_);
        for (int i = 0; i < m_; ++i) p.mu[i] = free_values[tie(i)];
        for (int k = 0; k < K_; ++k) {
            Eigen::MatrixXd a(m_, m_), b(m_, m_);
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) {
                    a(i, j) = free_values[tie(alpha_index(m_, k, i, j))];
                    b(i, j) = free_values[n_lin_ + beta_slot(k, i, j)];
                }
            p.alpha.push_back(a);
            p.beta.push_back(b);
        }
        return p;
    }

private:
    [[nodiscard]] Eigen::VectorXd natural_of(const ModelParams& p) const {
        Eigen::VectorXd x(natural_size(m_, K_));
        for (int i = 0; i < m_; ++i) x[i] = p.mu[i];
        for (int k = 0; k < K_; ++k)
            for (int i = 0; i < m_; ++i)
                for (int j = 0; j < m_; ++j) x[alpha_index(m_, k, i, j)] = p.alpha[static_cast<std::size_t>(k)](i, j);
        return x;
    }

    ConstraintProfile profile_;
    int m_;
    int K_;
    int n_lin_{0};
    int n_beta_{0};
    std::vector<int> tie_;
    std::vector<std::string> names_;
};

/// The conditional problem at fixed β in free linear coordinates:
///     L(θ) = cᵀθ + Σ_n log(u_nᵀθ).
struct ConditionalDesign {
    Eigen::MatrixXd U;
    Eigen::VectorXd c;
};

[[nodiscard]] inline ConditionalDesign conditional_design(const FreeLayout& layout, const SufficientStats& st) {
    const int m = st.m;
    const int K = st.K;
    std::size_t total = 0;
    for (auto n : st.n_by_type) total += n;
    ConditionalDesign d;
    d.U = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), layout.n_linear());
    d.c = Eigen::VectorXd::Zero(layout.n_linear());
    Eigen::Index row0 = 0;
    for (int i = 0; i < m; ++i) {
        const auto& a = st.a[static_cast<std::size_t>(i)];
        const Eigen::Index rows = a.rows();
        d.U.block(row0, layout.tie(i), rows, 1).array() += 1.0;
        d.c[layout.tie(i)] -= st.T;
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < m; ++j) {
                const int q = layout.tie(alpha_index(m, k, i, j));
                d.U.block(row0, q, rows, 1) += a.col(k * m + j);
                d.c[q] -= st.b_total[static_cast<std::size_t>(i)][k * m + j];
            }
        row0 += rows;
    }
    return d;
}

} // namespace mkhawkes
