#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "params.hpp"

namespace mkhawkes {

/// Stationary first and second moments of a Markov (row-shared β) model.
///
/// E_LL is E[Λ_t Λ_tᵀ] for the stacked component vector Λ_t (index k·m + i).
/// A and B give E[λ_t N_tᵀ] ≈ A t + B (particular solution; the transient
/// part of the ODE is excluded).
struct MomentReport {
    Eigen::VectorXd E_lambda;
    std::vector<Eigen::VectorXd> E_lambda_k;
    Eigen::MatrixXd E_LL;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    double sylvester_residual{0.0};

    /// E[N_t N_tᵀ] = A t² + (B + Bᵀ + Dg(E[λ])) t.
    [[nodiscard]] Eigen::MatrixXd E_NN(double t) const {
        if (!(t > 0.0)) throw InvalidParameter("moment horizon must be positive");
        Eigen::MatrixXd lin = B + B.transpose();
        lin.diagonal() += E_lambda;
        return A * t * t + lin * t;
    }

    [[nodiscard]] Eigen::VectorXd E_N(double t) const {
        if (!(t > 0.0)) throw InvalidParameter("moment horizon must be positive");
        return E_lambda * t;
    }

    /// Var(N_1(t) − N_2(t)) = t · (2 vᵀ B v + 1ᵀ E[λ]), v = [1, −1]ᵀ.
    [[nodiscard]] double var_diff(double t) const {
        if (!(t > 0.0)) throw InvalidParameter("moment horizon must be positive");
        if (E_lambda.size() != 2) throw InvalidParameter("mid-price variance needs a bivariate model");
        const Eigen::Vector2d v(1.0, -1.0);
        return t * (2.0 * v.dot(B * v) + E_lambda.sum());
    }
};

namespace detail {

/// Diagonal decay matrix β (mK×mK) and stacked jump matrix α (mK×m).
inline void stacked_blocks(const ModelParams& p, Eigen::MatrixXd& beta, Eigen::MatrixXd& alpha) {
    const int m = p.dim();
    const int K = p.kernels();
    beta = Eigen::MatrixXd::Zero(m * K, m * K);
    alpha.resize(m * K, m);
    for (int k = 0; k < K; ++k) {
        alpha.block(k * m, 0, m, m) = p.alpha[static_cast<std::size_t>(k)];
        for (int i = 0; i < m; ++i) beta(k * m + i, k * m + i) = p.beta[static_cast<std::size_t>(k)](i, 0);
    }
}

inline Eigen::MatrixXd summing_matrix(int m, int K) {
    Eigen::MatrixXd J(m, m * K);
    for (int k = 0; k < K; ++k) J.block(0, k * m, m, m).setIdentity();
    return J;
}

inline void require_markov(const ModelParams& p) {
    p.validate();
    if (!p.row_shared_beta())
        throw InvalidParameter("closed-form moments require beta shared along each row (Markov restriction)");
}

} // namespace detail

/// E[λ] = (I − Σ_k β_k⁻¹α_k)⁻¹ μ and E[λ_k] = β_k⁻¹α_k E[λ].
[[nodiscard]] inline std::vector<Eigen::VectorXd> stationary_intensity(const ModelParams& p) {
    p.validate();
    const Eigen::MatrixXd S = branching_matrix(p);
    const double rho = spectral_radius(S);
    if (!(rho < 1.0))
        throw NonStationary("branching matrix spectral radius " + std::to_string(rho) + " >= 1");
    const int m = p.dim();
    Eigen::VectorXd El = (Eigen::MatrixXd::Identity(m, m) - S).partialPivLu().solve(p.mu);
    std::vector<Eigen::VectorXd> out{El};
    for (int k = 0; k < p.kernels(); ++k) {
        const Eigen::MatrixXd ratio =
            (p.alpha[static_cast<std::size_t>(k)].array() / p.beta[static_cast<std::size_t>(k)].array()).matrix();
        out.emplace_back(ratio * El);
    }
    return out;
}

/// Solves (β − αJ) X + X (β − αJ)ᵀ = αμE[Λ]ᵀ + E[Λ]μᵀαᵀ + α Dg(E[λ]) αᵀ
/// through the Kronecker form (I ⊗ M + M ⊗ I) vec X = vec C.
[[nodiscard]] inline Eigen::MatrixXd second_moment_LL(const ModelParams& p, double* residual = nullptr) {
    detail::require_markov(p);
    const int m = p.dim();
    const int K = p.kernels();
    const int n = m * K;
    const auto first = stationary_intensity(p);
    const Eigen::VectorXd& El = first[0];
    Eigen::VectorXd ELam(n);
    for (int k = 0; k < K; ++k) ELam.segment(k * m, m) = first[static_cast<std::size_t>(k) + 1];

    Eigen::MatrixXd beta, alpha;
    detail::stacked_blocks(p, beta, alpha);
    const Eigen::MatrixXd J = detail::summing_matrix(m, K);
    const Eigen::MatrixXd M = beta - alpha * J;
    const Eigen::VectorXd amu = alpha * p.mu;
    const Eigen::MatrixXd C =
        amu * ELam.transpose() + ELam * amu.transpose() + alpha * El.asDiagonal() * alpha.transpose();

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd kron(n * n, n * n);
    // Column-major vec: vec(M X) = (I ⊗ M) vec X, vec(X Mᵀ) = (M ⊗ I) vec X.
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) kron.block(r * n, c * n, n, n) = I(r, c) * M + M(r, c) * I;

    const Eigen::Map<const Eigen::VectorXd> rhs(C.data(), C.size());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kron);
    if (!lu.isInvertible()) throw DegenerateModel("Kronecker system for E[ΛΛᵀ] is singular");
    Eigen::VectorXd x = lu.solve(rhs);
    Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
    X = (0.5 * (X + X.transpose())).eval();

    if (residual) {
        const Eigen::MatrixXd R = M * X + X * M.transpose() - C;
        const double scale = std::max(C.norm(), (M * X).norm());
        *residual = scale > 0.0 ? R.norm() / scale : R.norm();
    }
    return X;
}

/// Full moment report: E[λ], E[λ_k], E[ΛΛᵀ], A and B.
[[nodiscard]] inline MomentReport compute_moments(const ModelParams& p) {
    detail::require_markov(p);
    const int m = p.dim();
    const int K = p.kernels();
    MomentReport r;
    auto first = stationary_intensity(p);
    r.E_lambda = first[0];
    r.E_lambda_k.assign(first.begin() + 1, first.end());
    r.E_LL = second_moment_LL(p, &r.sylvester_residual);

    Eigen::VectorXd ELam(m * K);
    for (int k = 0; k < K; ++k) ELam.segment(k * m, m) = r.E_lambda_k[static_cast<std::size_t>(k)];

    const Eigen::MatrixXd S = branching_matrix(p);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    const auto lu = (I - S).partialPivLu();
    r.A = r.E_lambda * r.E_lambda.transpose();

    const Eigen::MatrixXd J = detail::summing_matrix(m, K);
    // E[Λ λᵀ] = E[Λ] μᵀ + E[ΛΛᵀ] Jᵀ; rows k·m..k·m+m−1 give E[λ_k λᵀ].
    const Eigen::MatrixXd ELl = ELam * p.mu.transpose() + r.E_LL * J.transpose();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < K; ++k) {
        const auto& a = p.alpha[static_cast<std::size_t>(k)];
        const Eigen::VectorXd binv = p.beta[static_cast<std::size_t>(k)].col(0).cwiseInverse();
        const Eigen::MatrixXd inner =
            -(binv.asDiagonal() * a) * r.A + ELl.block(k * m, 0, m, m) + a * r.E_lambda.asDiagonal();
        acc += binv.asDiagonal() * inner;
    }
    r.B = lu.solve(acc);
    return r;
}

} // namespace mkhawkes
