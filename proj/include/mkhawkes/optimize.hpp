#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace mkhawkes {

struct OptimResult {
    Eigen::VectorXd x;
    double value{std::numeric_limits<double>::quiet_NaN()};
    int iterations{0};
    int evaluations{0};
    bool converged{false};
    std::string message;
};

// ---------------------------------------------------------------------------
// Concave log-linear maximisation
// ---------------------------------------------------------------------------

/// Maximises f(θ) = cᵀθ + Σ_n log(u_nᵀθ) subject to θ ≥ lower, where u_n are
/// the rows of U. f is concave, so any stationary point of the box-constrained
/// problem is the global maximum; a projected Newton method with an active set
/// finds it from any feasible start with Uθ > 0.
struct LogLinearOptions {
    int max_iterations{200};
    double decrement_tol{1e-10};
    double armijo{1e-4};
};

[[nodiscard]] inline OptimResult maximize_log_linear(const Eigen::MatrixXd& U, const Eigen::VectorXd& c,
                                                     Eigen::VectorXd theta, const Eigen::VectorXd& lower,
                                                     const LogLinearOptions& opt = {}) {
    const Eigen::Index p = c.size();
    OptimResult res;
    theta = theta.cwiseMax(lower);
    auto value = [&](const Eigen::VectorXd& th, Eigen::VectorXd* lam_out) {
        Eigen::VectorXd lam = U * th;
        if ((lam.array() <= 0.0).any() || !lam.allFinite()) return -std::numeric_limits<double>::infinity();
        ++res.evaluations;
        const double v = c.dot(th) + lam.array().log().sum();
        if (lam_out) *lam_out = std::move(lam);
        return v;
    };
    Eigen::VectorXd lam;
    double f = value(theta, &lam);
    if (!std::isfinite(f)) {
        res.x = theta;
        res.message = "infeasible start (non-positive intensity)";
        return res;
    }
    std::vector<char> active(static_cast<std::size_t>(p), 0);
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        const Eigen::VectorXd w = lam.cwiseInverse();
        const Eigen::VectorXd g = c + U.transpose() * w;
        const Eigen::MatrixXd Uw = U.array().colwise() * w.array();
        const Eigen::MatrixXd negH = Uw.transpose() * Uw;

        std::vector<Eigen::Index> free;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double slack = theta[j] - lower[j];
            const bool at_bound = slack <= 1e-14 * std::max(1.0, std::abs(lower[j]));
            active[static_cast<std::size_t>(j)] = at_bound && g[j] <= 0.0;
            if (!active[static_cast<std::size_t>(j)]) free.push_back(j);
        }
        if (free.empty()) {
            res.converged = true;
            res.message = "all coordinates at bounds";
            break;
        }
        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd Hf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (Eigen::Index r = 0; r < nf; ++r) {
            gf[r] = g[free[static_cast<std::size_t>(r)]];
            for (Eigen::Index q = 0; q < nf; ++q)
                Hf(r, q) = negH(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(q)]);
        }
        const double ridge = 1e-12 * std::max(Hf.diagonal().maxCoeff(), 1e-300);
        Hf.diagonal().array() += ridge;
        Eigen::VectorXd df = Hf.ldlt().solve(gf);
        if (!df.allFinite()) df = gf.array() / Hf.diagonal().array();
        const double decrement = gf.dot(df);
        if (decrement <= opt.decrement_tol) {
            res.converged = true;
            res.message = "newton decrement below tolerance";
            break;
        }
        Eigen::VectorXd d = Eigen::VectorXd::Zero(p);
        for (Eigen::Index r = 0; r < nf; ++r) d[free[static_cast<std::size_t>(r)]] = df[r];

        auto try_direction = [&](const Eigen::VectorXd& dir) {
            double step = 1.0;
            for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
                Eigen::VectorXd cand = (theta + step * dir).cwiseMax(lower);
                const double gain = g.dot(cand - theta);
                if (gain <= 0.0) continue;
                Eigen::VectorXd lam_c;
                const double fc = value(cand, &lam_c);
                if (std::isfinite(fc) && fc >= f + opt.armijo * gain) {
                    theta = std::move(cand);
                    lam = std::move(lam_c);
                    f = fc;
                    return true;
                }
            }
            return false;
        };
        if (try_direction(d)) continue;
        // Fall back to a diagonally scaled projected gradient step.
        Eigen::VectorXd dg = Eigen::VectorXd::Zero(p);
        for (Eigen::Index r = 0; r < nf; ++r) dg[free[static_cast<std::size_t>(r)]] = gf[r] / Hf(r, r);
        if (try_direction(dg)) continue;
        res.converged = decrement <= 1e-6 * std::max(1.0, std::abs(f));
        res.message = res.converged ? "line search stalled at numerical precision" : "line search failed";
        break;
    }
    if (res.iterations >= opt.max_iterations) res.message = "iteration limit";
    res.x = theta;
    res.value = f;
    return res;
}

// ---------------------------------------------------------------------------
// Quasi-Newton (BFGS) minimisation
// ---------------------------------------------------------------------------

struct BfgsOptions {
    int max_iterations{500};
    double gradient_tol{1e-6};  // relative: ‖g‖∞ ≤ tol · max(1, |f|)
    double step_tol{1e-9};      // ‖Δx‖∞
    double armijo{1e-4};
};

/// `fg(x, g)` returns f(x) and writes ∇f into g; it may return +inf (or
/// throw) for infeasible points, which the line search treats as rejection.
template <class FG>
[[nodiscard]] OptimResult bfgs_minimize(FG&& fg, Eigen::VectorXd x, const BfgsOptions& opt = {}) {
    const Eigen::Index n = x.size();
    OptimResult res;
    auto eval = [&](const Eigen::VectorXd& pt, Eigen::VectorXd& g) {
        ++res.evaluations;
        try {
            const double v = fg(pt, g);
            return std::isfinite(v) && g.allFinite() ? v : std::numeric_limits<double>::infinity();
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    Eigen::VectorXd g(n);
    double f = eval(x, g);
    if (!std::isfinite(f)) {
        res.x = x;
        res.message = "non-finite objective at the starting point";
        return res;
    }
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (g.cwiseAbs().maxCoeff() <= opt.gradient_tol * std::max(1.0, std::abs(f))) {
            res.converged = true;
            res.message = "gradient below tolerance";
            break;
        }
        Eigen::VectorXd d = -Hinv * g;
        if (g.dot(d) >= 0.0) {
            Hinv.setIdentity();
            d = -g;
            fresh = true;
        }
        if (fresh) {
            // Scale the first step so it moves at most one unit per coordinate.
            const double big = d.cwiseAbs().maxCoeff();
            if (big > 1.0) d /= big;
        }
        double step = 1.0;
        Eigen::VectorXd xn, gn(n);
        double fn = std::numeric_limits<double>::infinity();
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            xn = x + step * d;
            fn = eval(xn, gn);
            if (std::isfinite(fn) && fn <= f + opt.armijo * step * g.dot(d)) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            if (!fresh) {
                Hinv.setIdentity();
                fresh = true;
                continue;
            }
            res.message = "line search failed";
            break;
        }
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        const double fprev = f;
        x = xn;
        f = fn;
        g = gn;
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) Hinv *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
            fresh = false;
        }
        if (s.cwiseAbs().maxCoeff() < opt.step_tol && std::abs(fprev - f) <= 1e-14 * std::max(1.0, std::abs(f))) {
            res.converged = g.cwiseAbs().maxCoeff() <= 1e3 * opt.gradient_tol * std::max(1.0, std::abs(f));
            res.message = "step below tolerance";
            break;
        }
    }
    if (res.iterations >= opt.max_iterations) res.message = "iteration limit";
    res.x = x;
    res.value = f;
    return res;
}

// ---------------------------------------------------------------------------
// Nelder–Mead simplex minimisation
// ---------------------------------------------------------------------------

struct NelderMeadOptions {
    int max_evaluations{2000};
    double f_tol{1e-10};  // absolute spread of simplex values
    double x_tol{1e-8};   // simplex diameter (∞-norm)
};

template <class F>
[[nodiscard]] OptimResult nelder_mead_minimize(F&& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                                               const NelderMeadOptions& opt = {}) {
    const Eigen::Index n = x0.size();
    OptimResult res;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::vector<Eigen::VectorXd> pts{x0};
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd x = x0;
        x[i] += step[i];
        pts.push_back(x);
    }
    std::vector<double> vals;
    for (const auto& x : pts) vals.push_back(eval(x));
    std::vector<std::size_t> order(pts.size());

    while (res.evaluations < opt.max_evaluations) {
        ++res.iterations;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];
        double diam = 0.0;
        for (const auto& x : pts) diam = std::max(diam, (x - pts[best]).cwiseAbs().maxCoeff());
        if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= opt.f_tol && diam <= opt.x_tol) {
            res.converged = true;
            res.message = "simplex converged";
            break;
        }
        if (diam <= 1e-3 * opt.x_tol) {
            res.converged = true;
            res.message = "simplex collapsed";
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (i != worst) centroid += pts[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = eval(xr);
        if (fr < vals[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        const Eigen::VectorXd xc =
            outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(xc);
        if (fc < (outside ? fr : vals[worst])) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i == best) continue;
            pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
            vals[i] = eval(pts[i]);
        }
    }
    if (!res.converged) res.message = "evaluation limit";
    const auto it = std::min_element(vals.begin(), vals.end());
    res.x = pts[static_cast<std::size_t>(it - vals.begin())];
    res.value = *it;
    return res;
}

} // namespace mkhawkes
