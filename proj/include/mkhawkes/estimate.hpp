#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "event_stream.hpp"
#include "likelihood.hpp"
#include "log.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "parameterization.hpp"
#include "params.hpp"
#include "rng.hpp"

namespace mkhawkes {

/// One evaluated decay vector of the profile likelihood L*(β).
struct ProfilePoint {
    Eigen::VectorXd beta;
    double lstar{std::numeric_limits<double>::quiet_NaN()};
    bool ok{false};
    std::string note;
};

struct StdErrors {
    Eigen::VectorXd se;        // NaN where undefined
    Eigen::MatrixXd information;
    bool ok{false};
    std::string note;
};

struct FitResult {
    ModelParams params_hat;
    std::vector<std::string> names;
    Eigen::VectorXd estimates;   // free parameters, layout order
    Eigen::VectorXd std_errors;  // NaN where undefined
    ModelParams std_error_params;  // std_errors in ModelParams shape
    bool std_errors_ok{false};
    std::string std_errors_note;
    double loglik{std::numeric_limits<double>::quiet_NaN()};
    double aic{std::numeric_limits<double>::quiet_NaN()};
    std::size_t n_events{0};
    int n_params{0};
    bool converged{false};
    std::string method;
    int iterations{0};
    int evaluations{0};
    std::string message;
    double concavity_max_eig{std::numeric_limits<double>::quiet_NaN()};  // of the (μ, α) Hessian, relative to its norm
    std::vector<ProfilePoint> profile_surface;
};

[[nodiscard]] inline double aic(double loglik, int n_params) { return 2.0 * n_params - 2.0 * loglik; }

// ---------------------------------------------------------------------------
// Defaults derived from the data
// ---------------------------------------------------------------------------

/// [1/q_0.9, 1/q_0.01] of the pooled inter-event times.
[[nodiscard]] inline std::pair<double, double> default_beta_range(const EventStream& s) {
    if (s.size() < 3) throw InvalidStream("at least three events are needed to derive decay ranges");
    std::vector<double> gaps;
    gaps.reserve(s.size() - 1);
    for (std::size_t n = 1; n < s.size(); ++n) gaps.push_back(s.time(n) - s.time(n - 1));
    std::sort(gaps.begin(), gaps.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(gaps.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, gaps.size() - 1);
        return gaps[lo] + (pos - static_cast<double>(lo)) * (gaps[hi] - gaps[lo]);
    };
    const double lo = 1.0 / q(0.9);
    double hi = 1.0 / std::max(q(0.01), 1e-9);
    if (!(hi > lo * 1.5)) hi = lo * 10.0;
    return {lo, hi};
}

/// Log-spaced values from a to b inclusive.
[[nodiscard]] inline std::vector<double> log_space(double a, double b, int n) {
    std::vector<double> v;
    if (n == 1) return {std::sqrt(a * b)};
    for (int i = 0; i < n; ++i)
        v.push_back(std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1)));
    return v;
}

/// Default start: K log-spaced decays over the data range (largest first),
/// α = 0.5·β/(mK) per entry, μ = half the empirical rate.
[[nodiscard]] inline ModelParams default_init(const EventStream& s, int K, ConstraintProfile profile) {
    const auto [lo, hi] = default_beta_range(s);
    auto betas = log_space(lo, hi, K);
    std::reverse(betas.begin(), betas.end());
    const int m = s.dim;
    FreeLayout layout(profile, m, K);
    const auto counts = s.counts();
    const double T = s.horizon();
    Eigen::VectorXd beta_free(layout.n_beta());
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) beta_free[layout.beta_slot(k, i, j)] = betas[static_cast<std::size_t>(k)];
    Eigen::VectorXd lin(layout.n_linear());
    double pooled = 0.0;
    for (auto c : counts) pooled += static_cast<double>(c);
    for (int i = 0; i < m; ++i) {
        const double rate = profile == ConstraintProfile::symmetric_bivariate
                                ? pooled / (m * T)
                                : static_cast<double>(counts[static_cast<std::size_t>(i)]) / T;
        lin[layout.tie(i)] = 0.5 * std::max(rate, 1e-12);
    }
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                lin[layout.tie(alpha_index(m, k, i, j))] = 0.5 * betas[static_cast<std::size_t>(k)] / (m * K);
    return layout.assemble(lin, beta_free);
}

// ---------------------------------------------------------------------------
// Conditional (fixed-β) maximisation
// ---------------------------------------------------------------------------

struct ConditionalFit {
    Eigen::VectorXd lin;
    double lstar{-std::numeric_limits<double>::infinity()};
    bool converged{false};
    int iterations{0};
    std::string message;
};

namespace detail {

inline Eigen::VectorXd linear_lower_bounds(const FreeLayout& layout, const EventStream& s) {
    Eigen::VectorXd lower = Eigen::VectorXd::Zero(layout.n_linear());
    const double rate = static_cast<double>(std::max<std::size_t>(s.size(), 1)) / std::max(s.horizon(), 1e-300);
    for (int q = 0; q < layout.n_linear(); ++q)
        if (layout.is_mu(q)) lower[q] = 1e-12 * rate;
    return lower;
}

inline Eigen::VectorXd linear_start(const FreeLayout& layout, const EventStream& s, const Eigen::VectorXd& beta_free) {
    const ModelParams init = default_init(s, layout.kernels(), layout.profile());
    Eigen::VectorXd lin = layout.linear_of(init);
    // Rescale the excitation start to the decays actually in use.
    const auto betas = layout.expand_beta(beta_free);
    const int m = layout.dim();
    const int K = layout.kernels();
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                lin[layout.tie(alpha_index(m, k, i, j))] = 0.5 * betas[static_cast<std::size_t>(k)](i, j) / (m * K);
    return lin;
}

} // namespace detail

/// L*(β) = max_{μ, α} L(μ, α | β), a concave problem solved from any
/// feasible start.
[[nodiscard]] inline ConditionalFit maximize_conditional(const FreeLayout& layout, const EventStream& s,
                                                         const Eigen::VectorXd& beta_free,
                                                         const std::optional<Eigen::VectorXd>& start = std::nullopt) {
    const auto st = sufficient_stats(layout.expand_beta(beta_free), s);
    const auto design = conditional_design(layout, st);
    const Eigen::VectorXd lower = detail::linear_lower_bounds(layout, s);
    Eigen::VectorXd x0 = start ? *start : detail::linear_start(layout, s, beta_free);
    const auto res = maximize_log_linear(design.U, design.c, x0, lower);
    ConditionalFit out;
    out.lin = res.x;
    out.lstar = res.value;
    out.converged = res.converged;
    out.iterations = res.iterations;
    out.message = res.message;
    return out;
}

// ---------------------------------------------------------------------------
// Standard errors
// ---------------------------------------------------------------------------

/// SEs from the inverse observed information in free coordinates. The (μ, α)
/// block is analytic; blocks involving β use central differences (of the
/// analytic gradient for mixed terms, of L for β–β terms). Parameters with no
/// information (e.g. a decay whose kernel has α = 0) are reported undefined.
/// `fixed` marks free parameters held fixed (excluded from the inversion).
[[nodiscard]] inline StdErrors standard_errors(const FreeLayout& layout, const ModelParams& p, const EventStream& s,
                                               const std::vector<bool>& fixed = {}) {
    const int nl = layout.n_linear();
    const int nb = layout.n_beta();
    const int nf = nl + nb;
    const Eigen::VectorXd lin = layout.linear_of(p);
    const Eigen::VectorXd beta = layout.beta_of(p);

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nf, nf);
    H.topLeftCorner(nl, nl) = layout.fold_hessian(conditional_hessian(p, s));

    auto L_at = [&](const Eigen::VectorXd& b) { return log_likelihood(layout.assemble(lin, b), s); };
    auto g_at = [&](const Eigen::VectorXd& b) {
        return layout.fold_gradient(evaluate_likelihood(layout.assemble(lin, b), s, true).gradient);
    };
    Eigen::VectorXd h(nb);
    for (int b = 0; b < nb; ++b) h[b] = 1e-4 * beta[b];
    const double L0 = nb > 0 ? L_at(beta) : 0.0;
    for (int b = 0; b < nb; ++b) {
        Eigen::VectorXd bp = beta, bm = beta;
        bp[b] += h[b];
        bm[b] -= h[b];
        const Eigen::VectorXd col = (g_at(bp) - g_at(bm)) / (2.0 * h[b]);
        H.block(0, nl + b, nl, 1) = col;
        H.block(nl + b, 0, 1, nl) = col.transpose();
        H(nl + b, nl + b) = (L_at(bp) - 2.0 * L0 + L_at(bm)) / (h[b] * h[b]);
        for (int c = 0; c < b; ++c) {
            auto shifted = [&](double sb, double sc) {
                Eigen::VectorXd v = beta;
                v[b] += sb * h[b];
                v[c] += sc * h[c];
                return L_at(v);
            };
            const double v = (shifted(1, 1) - shifted(1, -1) - shifted(-1, 1) + shifted(-1, -1)) / (4.0 * h[b] * h[c]);
            H(nl + b, nl + c) = H(nl + c, nl + b) = v;
        }
    }

    StdErrors out;
    out.information = -H;
    out.se = Eigen::VectorXd::Constant(nf, std::numeric_limits<double>::quiet_NaN());
    const double max_diag = out.information.diagonal().cwiseAbs().maxCoeff();
    std::vector<int> keep;
    bool dropped = false;
    for (int q = 0; q < nf; ++q) {
        if (!fixed.empty() && fixed[static_cast<std::size_t>(q)]) continue;
        if (!(out.information(q, q) > 1e-12 * max_diag)) {
            dropped = true;
            continue;
        }
        keep.push_back(q);
    }
    const auto nk = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd I(nk, nk);
    for (Eigen::Index r = 0; r < nk; ++r)
        for (Eigen::Index c = 0; c < nk; ++c) I(r, c) = out.information(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
    // Equilibrate before factorising; parameters differ by many orders of magnitude.
    const Eigen::VectorXd d = I.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd Is = d.asDiagonal() * I * d.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(Is);
    if (llt.info() != Eigen::Success) {
        out.ok = false;
        out.note = "observed information is not positive definite";
        return out;
    }
    const Eigen::MatrixXd inv = d.asDiagonal() * llt.solve(Eigen::MatrixXd::Identity(nk, nk)) * d.asDiagonal();
    for (Eigen::Index r = 0; r < nk; ++r) out.se[keep[static_cast<std::size_t>(r)]] = std::sqrt(std::max(inv(r, r), 0.0));
    out.ok = !dropped;
    out.note = dropped ? "some parameters carry no information; their errors are undefined" : "";
    return out;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct ProfileOptions {
    int points_per_axis{15};
    double beta_min{0.0};  // 0: derive from the data
    double beta_max{0.0};
    bool refine{true};
    bool polish{true};
    bool compute_se{true};
    unsigned threads{1};
};

namespace detail {

inline void finalize_fit(FitResult& r, const FreeLayout& layout, const EventStream& s, bool compute_se) {
    r.params_hat = canonicalize(r.params_hat);
    r.names = layout.names();
    r.estimates = layout.free_of(r.params_hat);
    r.n_params = layout.n_free();
    r.n_events = s.size();
    r.loglik = log_likelihood(r.params_hat, s);
    r.aic = aic(r.loglik, r.n_params);
    const Eigen::MatrixXd Hlin = layout.fold_hessian(conditional_hessian(r.params_hat, s));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hlin, Eigen::EigenvaluesOnly);
    const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
    r.concavity_max_eig = norm > 0.0 ? es.eigenvalues().maxCoeff() / norm : 0.0;
    const double rho = spectral_radius(r.params_hat);
    if (!(rho < 1.0)) warn("fitted model is not stationary (spectral radius " + std::to_string(rho) + ")");
    if (compute_se) {
        const auto se = standard_errors(layout, r.params_hat, s);
        r.std_errors = se.se;
        r.std_errors_ok = se.ok;
        r.std_errors_note = se.note;
    } else {
        r.std_errors = Eigen::VectorXd::Constant(layout.n_free(), std::numeric_limits<double>::quiet_NaN());
        r.std_errors_note = "not computed";
    }
    r.std_error_params = layout.shape_like(r.std_errors);
}

inline void check_fit_input(const EventStream& s, int K) {
    s.validate();
    if (K < 1) throw InvalidParameter("kernel count must be at least 1");
    for (auto c : s.counts())
        if (c < 2) throw InvalidStream("estimation needs at least two events of every type");
}

/// Enumerates grid tuples; with `ordered`, only strictly decreasing tuples.
inline std::vector<Eigen::VectorXd> grid_tuples(const std::vector<std::vector<double>>& axes, bool ordered) {
    std::vector<Eigen::VectorXd> out;
    const auto d = axes.size();
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d));
        bool keep = true;
        for (std::size_t a = 0; a < d; ++a) {
            v[static_cast<Eigen::Index>(a)] = axes[a][idx[a]];
            if (ordered && a > 0 && !(v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(a) - 1])) keep = false;
        }
        if (keep) out.push_back(v);
        std::size_t a = d;
        while (a > 0) {
            --a;
            if (++idx[a] < axes[a].size()) break;
            idx[a] = 0;
            if (a == 0) return out;
        }
        if (d == 0) return out;
    }
}

} // namespace detail

/// Evaluates L*(β) on a list of decay vectors (independent; parallel-safe).
[[nodiscard]] inline std::vector<ProfilePoint> evaluate_profile(const FreeLayout& layout, const EventStream& s,
                                                                const std::vector<Eigen::VectorXd>& betas,
                                                                unsigned threads = 1) {
    std::vector<ProfilePoint> pts(betas.size());
    parallel_for(betas.size(), threads, [&](std::size_t q) {
        ProfilePoint& pt = pts[q];
        pt.beta = betas[q];
        try {
            const auto cf = maximize_conditional(layout, s, betas[q]);
            pt.lstar = cf.lstar;
            pt.ok = cf.converged && std::isfinite(cf.lstar);
            if (!pt.ok) pt.note = cf.message;
        } catch (const Error& e) {
            pt.note = e.what();
        }
    });
    return pts;
}

/// Profile-likelihood estimation: L*(β) on a log grid (decays ordered
/// β_1 > β_2 > … for scalar-per-kernel layouts), one refinement around the
/// best cell, then Nelder–Mead over log β. Decay spaces of more than three
/// dimensions skip the grid and start the simplex from the scalar-per-kernel
/// profile optimum.
[[nodiscard]] inline FitResult fit_profile(const EventStream& s, int K, ConstraintProfile profile,
                                           const ProfileOptions& opt = {}) {
    detail::check_fit_input(s, K);
    if (opt.points_per_axis < 2) throw InvalidParameter("profile grid needs at least two points per axis");
    const FreeLayout layout(profile, s.dim, K);
    auto [lo, hi] = default_beta_range(s);
    if (opt.beta_min > 0.0) lo = opt.beta_min;
    if (opt.beta_max > 0.0) hi = opt.beta_max;
    if (!(hi > lo)) throw InvalidParameter("empty decay grid (beta_max <= beta_min)");

    FitResult r;
    r.method = "profile";
    const int nb = layout.n_beta();
    const bool ordered = layout.scalar_beta() && K > 1;
    Eigen::VectorXd best_beta;
    double best = -std::numeric_limits<double>::infinity();
    auto consider = [&](const std::vector<ProfilePoint>& pts) {
        for (const auto& pt : pts) {
            r.profile_surface.push_back(pt);
            if (pt.ok && pt.lstar > best) {
                best = pt.lstar;
                best_beta = pt.beta;
            }
        }
    };

    double ratio = 2.0;
    if (nb <= 3) {
        const int npts = opt.points_per_axis;
        const auto axis = log_space(lo, hi, npts);
        ratio = std::pow(hi / lo, 1.0 / (npts - 1));
        consider(evaluate_profile(layout, s,
                                  detail::grid_tuples(std::vector<std::vector<double>>(static_cast<std::size_t>(nb), axis), ordered),
                                  opt.threads));
        if (best_beta.size() == 0) throw OptimizationFailure("no grid point produced a conditional maximum");
        if (opt.refine) {
            const int rpts = nb == 3 ? std::min(npts, 7) : npts;
            std::vector<std::vector<double>> axes;
            for (int b = 0; b < nb; ++b) axes.push_back(log_space(best_beta[b] / ratio, best_beta[b] * ratio, rpts));
            consider(evaluate_profile(layout, s, detail::grid_tuples(axes, ordered), opt.threads));
            ratio = std::pow(ratio * ratio, 1.0 / (rpts - 1));
        }
    } else {
        ProfileOptions inner = opt;
        inner.compute_se = false;
        const FitResult scalar = fit_profile(s, K, ConstraintProfile::scalar_per_kernel, inner);
        best_beta = layout.beta_of(scalar.params_hat);
        const auto cf = maximize_conditional(layout, s, best_beta);
        best = cf.lstar;
        r.profile_surface.push_back({best_beta, cf.lstar, cf.converged, "scalar-profile start"});
        ratio = 1.5;
    }

    r.converged = true;
    if (opt.polish) {
        auto objective = [&](const Eigen::VectorXd& x) {
            const Eigen::VectorXd b = x.array().exp();
            if (ordered)
                for (int k = 1; k < nb; ++k)
                    if (!(b[k] < b[k - 1])) return std::numeric_limits<double>::infinity();
            try {
                const auto cf = maximize_conditional(layout, s, b);
                return cf.converged ? -cf.lstar : std::numeric_limits<double>::infinity();
            } catch (const Error&) {
                return std::numeric_limits<double>::infinity();
            }
        };
        const Eigen::VectorXd x0 = best_beta.array().log();
        const Eigen::VectorXd step = Eigen::VectorXd::Constant(nb, std::log(ratio) / 2.0);
        NelderMeadOptions nmo;
        nmo.f_tol = 1e-9 * std::max(1.0, std::abs(best));
        nmo.x_tol = 1e-7;
        nmo.max_evaluations = 400 * nb;
        const auto nm = nelder_mead_minimize(objective, x0, step, nmo);
        r.iterations = nm.iterations;
        r.evaluations = nm.evaluations;
        r.message = nm.message;
        r.converged = nm.converged;
        if (std::isfinite(nm.value) && -nm.value >= best) {
            best = -nm.value;
            best_beta = nm.x.array().exp();
        }
    }
    const auto cf = maximize_conditional(layout, s, best_beta);
    if (!cf.converged) throw OptimizationFailure("conditional maximisation failed at the profile optimum: " + cf.message);
    r.params_hat = layout.assemble(cf.lin, best_beta);
    detail::finalize_fit(r, layout, s, opt.compute_se);
    return r;
}

struct DirectOptions {
    int max_restarts{3};
    bool compute_se{true};
    BfgsOptions bfgs{};
};

/// Quasi-Newton (BFGS) over log(μ, α, β). The (μ, α) gradient is analytic;
/// the β gradient uses central differences of L.
[[nodiscard]] inline FitResult fit_direct(const EventStream& s, int K, ConstraintProfile profile,
                                          std::optional<ModelParams> init = std::nullopt,
                                          const DirectOptions& opt = {}) {
    detail::check_fit_input(s, K);
    const FreeLayout layout(profile, s.dim, K);
    const ModelParams start = init ? *init : default_init(s, K, profile);
    if (start.dim() != s.dim || start.kernels() != K) throw InvalidParameter("initial parameters do not match");
    const int nl = layout.n_linear();
    const int nb = layout.n_beta();

    auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const Eigen::VectorXd v = x.array().exp();
        const ModelParams p = layout.assemble(v);
        const auto lv = evaluate_likelihood(p, s, true);
        g.resize(x.size());
        g.head(nl) = -(layout.fold_gradient(lv.gradient).array() * v.head(nl).array()).matrix();
        for (int b = 0; b < nb; ++b) {
            const double h = 1e-5;
            Eigen::VectorXd xp = x, xm = x;
            xp[nl + b] += h;
            xm[nl + b] -= h;
            const double Lp = log_likelihood(layout.assemble(Eigen::VectorXd(xp.array().exp())), s);
            const double Lm = log_likelihood(layout.assemble(Eigen::VectorXd(xm.array().exp())), s);
            g[nl + b] = -(Lp - Lm) / (2.0 * h);
        }
        return -lv.loglik;
    };

    Eigen::VectorXd free0 = layout.free_of(start);
    const double floor_val = 1e-10 * std::max(1.0, free0.cwiseAbs().maxCoeff());
    free0 = free0.cwiseMax(floor_val);
    Eigen::VectorXd x0 = free0.array().log();

    FitResult r;
    r.method = "direct";
    OptimResult best;
    best.value = std::numeric_limits<double>::infinity();
    Rng rng(derive_seed(0x5eed, static_cast<std::uint64_t>(K)));
    for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
        Eigen::VectorXd xs = x0;
        if (attempt > 0) {
            for (Eigen::Index q = 0; q < xs.size(); ++q)
                xs[q] += 0.1 * std::sqrt(-2.0 * std::log(rng.uniform_pos())) * std::cos(2.0 * M_PI * rng.uniform());
        }
        auto res = bfgs_minimize(fg, xs, opt.bfgs);
        r.iterations += res.iterations;
        r.evaluations += res.evaluations;
        if (std::isfinite(res.value) && (res.value < best.value || (!best.converged && res.converged))) best = res;
        if (res.converged) break;
    }
    if (!std::isfinite(best.value)) throw OptimizationFailure("quasi-Newton search failed from every start");
    if (!best.converged) throw OptimizationFailure("quasi-Newton search did not converge: " + best.message);
    r.converged = true;
    r.message = best.message;
    r.params_hat = layout.assemble(Eigen::VectorXd(best.x.array().exp()));
    detail::finalize_fit(r, layout, s, opt.compute_se);
    return r;
}

/// Fits each K and returns the results ordered by increasing AIC.
[[nodiscard]] inline std::vector<FitResult> select_model(const EventStream& s, const std::vector<int>& K_list,
                                                         ConstraintProfile profile, const ProfileOptions& opt = {}) {
    if (K_list.empty()) throw InvalidParameter("no kernel counts given");
    std::vector<FitResult> out;
    for (int K : K_list) out.push_back(fit_profile(s, K, profile, opt));
    std::stable_sort(out.begin(), out.end(), [](const FitResult& a, const FitResult& b) { return a.aic < b.aic; });
    return out;
}

} // namespace mkhawkes
