#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "estimate.hpp"
#include "moments.hpp"
#include "params.hpp"
#include "simulate.hpp"

namespace mkhawkes {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline json to_json_vec(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json_mat(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json_vec(m.row(i).transpose()));
    return a;
}

inline double number(const json& j, const std::string& what) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) throw ParseError(what + " must be a number");
    return j.get<double>();
}

inline Eigen::VectorXd vec_from(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
    return v;
}

inline Eigen::MatrixXd mat_from(const json& j, int m, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != m) throw ParseError(what + " must be an m x m array");
    Eigen::MatrixXd out(m, m);
    for (int i = 0; i < m; ++i) {
        const auto row = vec_from(j[static_cast<std::size_t>(i)], what);
        if (row.size() != m) throw ParseError(what + " must be an m x m array");
        out.row(i) = row.transpose();
    }
    return out;
}

/// Profile-shaped parameter block (also used for standard errors).
inline json params_block(const ModelParams& p) {
    json j;
    j["constraint_profile"] = std::string(to_string(p.profile));
    j["m"] = p.dim();
    j["K"] = p.kernels();
    j["mu"] = to_json_vec(p.mu);
    json alpha = json::array();
    json beta = json::array();
    for (int k = 0; k < p.kernels(); ++k) {
        const auto& b = p.beta[static_cast<std::size_t>(k)];
        alpha.push_back(to_json_mat(p.alpha[static_cast<std::size_t>(k)]));
        switch (p.profile) {
        case ConstraintProfile::full: beta.push_back(to_json_mat(b)); break;
        case ConstraintProfile::markov_row: beta.push_back(to_json_vec(b.col(0))); break;
        default: beta.push_back(b(0, 0)); break;
        }
    }
    j["alpha"] = alpha;
    j["beta"] = beta;
    return j;
}

} // namespace detail

[[nodiscard]] inline json to_json(const ModelParams& p) {
    json j = detail::params_block(p);
    j["schema_version"] = kSchemaVersion;
    return j;
}

/// Accepts a parameter document, or any document with a `params_hat` member
/// (a fit result). `mu` may be a scalar for the symmetric bivariate profile.
[[nodiscard]] inline ModelParams params_from_json(const json& doc) {
    const json& j = doc.contains("params_hat") ? doc.at("params_hat") : doc;
    if (!j.is_object()) throw ParseError("parameter document must be an object");
    for (const char* key : {"constraint_profile", "mu", "alpha", "beta"})
        if (!j.contains(key)) throw ParseError(std::string("parameter document lacks '") + key + "'");
    ModelParams p;
    try {
        p.profile = profile_from_string(j.at("constraint_profile").get<std::string>());
    } catch (const InvalidParameter& e) {
        throw ParseError(e.what());
    }
    const json& jm = j.at("mu");
    if (jm.is_number()) {
        const int m = p.profile == ConstraintProfile::symmetric_bivariate ? 2 : 1;
        p.mu = Eigen::VectorXd::Constant(m, jm.get<double>());
    } else {
        p.mu = detail::vec_from(jm, "mu");
    }
    const int m = p.dim();
    const json& ja = j.at("alpha");
    const json& jb = j.at("beta");
    if (!ja.is_array() || !jb.is_array() || ja.size() != jb.size() || ja.empty())
        throw ParseError("alpha and beta must be non-empty arrays with one entry per kernel");
    for (std::size_t k = 0; k < ja.size(); ++k) {
        p.alpha.push_back(detail::mat_from(ja[k], m, "alpha"));
        const json& b = jb[k];
        switch (p.profile) {
        case ConstraintProfile::full: p.beta.push_back(detail::mat_from(b, m, "beta")); break;
        case ConstraintProfile::markov_row: {
            const auto row = detail::vec_from(b, "beta");
            if (row.size() != m) throw ParseError("MARKOV_ROW beta needs m entries per kernel");
            p.beta.push_back(row.replicate(1, m));
            break;
        }
        default: p.beta.push_back(Eigen::MatrixXd::Constant(m, m, detail::number(b, "beta"))); break;
        }
    }
    if (j.contains("K") && j.at("K").get<int>() != p.kernels()) throw ParseError("K does not match the kernel arrays");
    if (j.contains("m") && j.at("m").get<int>() != m) throw ParseError("m does not match mu");
    p.validate();
    return p;
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << j.dump(2) << '\n';
}

[[nodiscard]] inline ModelParams read_params_file(const std::string& path) { return params_from_json(read_json_file(path)); }

[[nodiscard]] inline json to_json(const MomentReport& r, const std::vector<double>& horizons = {}) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["E_lambda"] = detail::to_json_vec(r.E_lambda);
    json ek = json::array();
    for (const auto& v : r.E_lambda_k) ek.push_back(detail::to_json_vec(v));
    j["E_lambda_k"] = ek;
    j["E_LL"] = detail::to_json_mat(r.E_LL);
    j["A"] = detail::to_json_mat(r.A);
    j["B"] = detail::to_json_mat(r.B);
    j["sylvester_residual"] = r.sylvester_residual;
    json hs = json::array();
    for (double t : horizons) {
        json h;
        h["t"] = t;
        h["E_N"] = detail::to_json_vec(r.E_N(t));
        h["E_NN"] = detail::to_json_mat(r.E_NN(t));
        if (r.E_lambda.size() == 2) h["var_diff"] = r.var_diff(t);
        hs.push_back(h);
    }
    j["horizons"] = hs;
    return j;
}

[[nodiscard]] inline json to_json(const EnsembleSummary& s) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["n_paths"] = s.n_paths;
    j["horizon_s"] = s.horizon_s;
    j["mean_N"] = detail::to_json_vec(s.mean_N);
    j["se_N"] = detail::to_json_vec(s.se_N);
    j["mean_NN"] = detail::to_json_mat(s.mean_NN);
    j["se_NN"] = detail::to_json_mat(s.se_NN);
    return j;
}

[[nodiscard]] inline json to_json(const FitResult& r, bool with_surface = true) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["method"] = r.method;
    j["constraint_profile"] = std::string(to_string(r.params_hat.profile));
    j["K"] = r.params_hat.kernels();
    j["params_hat"] = detail::params_block(r.params_hat);
    j["std_errors"] = detail::params_block(r.std_error_params);
    json params = json::array();
    for (std::size_t q = 0; q < r.names.size(); ++q)
        params.push_back({{"name", r.names[q]},
                          {"estimate", r.estimates[static_cast<Eigen::Index>(q)]},
                          {"std_error", r.std_errors[static_cast<Eigen::Index>(q)]}});
    j["parameters"] = params;
    j["loglik"] = r.loglik;
    j["aic"] = r.aic;
    j["n_params"] = r.n_params;
    j["n_events"] = r.n_events;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["evaluations"] = r.evaluations;
    j["message"] = r.message;
    j["std_errors_ok"] = r.std_errors_ok;
    j["std_errors_note"] = r.std_errors_note;
    j["concavity_max_eig"] = r.concavity_max_eig;
    j["spectral_radius"] = spectral_radius(r.params_hat);
    if (with_surface && !r.profile_surface.empty()) {
        json betas = json::array(), lstar = json::array(), ok = json::array();
        for (const auto& pt : r.profile_surface) {
            betas.push_back(detail::to_json_vec(pt.beta));
            lstar.push_back(pt.lstar);
            ok.push_back(pt.ok);
        }
        j["profile_surface"] = {{"beta", betas}, {"lstar", lstar}, {"ok", ok}};
    }
    return j;
}

} // namespace mkhawkes
