#pragma once

#include <CLI11.hpp>
#include <mkhawkes/mkhawkes.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mkhawkes::cli {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::optional<std::int64_t> opt_ns(const std::string& s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    if (!csv::parse_int(csv::trim(s), v)) throw UsageError("not an integer nanosecond timestamp: " + s);
    return v;
}

inline SessionWindow parse_session(const std::string& spec) {
    SessionWindow w;
    if (spec.empty()) return w;
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw UsageError("--session expects start_ns:end_ns");
    w.start_ns = opt_ns(spec.substr(0, colon));
    w.end_ns = opt_ns(spec.substr(colon + 1));
    return w;
}

inline ConstraintProfile parse_profile(const std::string& s) {
    try {
        return profile_from_string(s);
    } catch (const InvalidParameter& e) {
        throw UsageError(e.what());
    }
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Writes to `path`, or to `fallback` when the path is empty or "-".
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    fn(f);
}

inline void write_scan_csv(std::ostream& o, const ScanResult& r) {
    const auto d = r.axes.size();
    for (std::size_t a = 0; a < d; ++a) o << "beta" << (a + 1) << ',';
    o << "Lstar,ok\n";
    o << std::setprecision(12);
    for (const auto& pt : r.points) {
        for (Eigen::Index a = 0; a < pt.beta.size(); ++a) o << pt.beta[a] << ',';
        if (pt.ok) o << pt.lstar;
        o << ',' << (pt.ok ? 1 : 0) << '\n';
    }
}

inline void write_surface_csv(std::ostream& o, const std::vector<ProfilePoint>& pts) {
    if (pts.empty()) return;
    for (Eigen::Index a = 0; a < pts.front().beta.size(); ++a) o << "beta" << (a + 1) << ',';
    o << "Lstar,ok\n" << std::setprecision(12);
    for (const auto& pt : pts) {
        for (Eigen::Index a = 0; a < pt.beta.size(); ++a) o << pt.beta[a] << ',';
        if (pt.ok) o << pt.lstar;
        o << ',' << (pt.ok ? 1 : 0) << '\n';
    }
}

} // namespace detail

/// Runs the command line. Returns 0 on success, 2 on usage errors and 1 on
/// computation errors (with a JSON error document written to `err`).
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Multi-kernel exponential Hawkes toolkit", "mkhawkes"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    std::string params_path, events_path, out_path, quotes_path, session, start_ns, end_ns;
    int dim = 2, kernels = 1, points = 15, threads = 1;
    std::string profile = "sym2", method = "profile";
    double beta_min = 0.0, beta_max = 0.0;

    // ingest ---------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "Quote CSV (timestamp_ns,bid,ask) to up/down mid-price events");
    ingest->add_option("--quotes", quotes_path, "Input quote CSV")->required();
    ingest->add_option("--out", out_path, "Output event CSV (timestamp_ns,type)")->required();
    ingest->add_option("--session", session, "Session window start_ns:end_ns (half-open; either side may be empty)");

    // simulate -------------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Simulate paths by thinning");
    double horizon = 1000.0, burn_in = 0.0;
    std::size_t paths = 1, max_events = 50'000'000;
    std::uint64_t seed = 0;
    std::string init = "stationary";
    simulate->add_option("--params", params_path, "Model parameter JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--horizon", horizon, "Horizon in seconds")->check(CLI::NonNegativeNumber);
    simulate->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "Master seed")->required();
    simulate->add_option("--init", init, "Initial state: stationary | burnin")->check(CLI::IsMember({"stationary", "burnin"}));
    simulate->add_option("--burn-in", burn_in, "Burn-in seconds for --init burnin")->check(CLI::NonNegativeNumber);
    simulate->add_option("--max-events", max_events, "Runaway guard per path");
    simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--out", out_path,
                         "events.csv (single path) or summary.json (ensemble moments); '-' for stdout JSON")
        ->required();

    // moments --------------------------------------------------------------
    auto* moments = app.add_subcommand("moments", "Closed-form stationary moments");
    std::vector<double> horizons;
    std::string grid_csv;
    double t_max = 0.0;
    int t_steps = 20;
    moments->add_option("--params", params_path, "Model parameter JSON")->required()->check(CLI::ExistingFile);
    moments->add_option("--t", horizons, "Horizon(s) in seconds")->check(CLI::PositiveNumber);
    moments->add_option("--out", out_path, "Output JSON (default stdout)");
    moments->add_option("--grid-csv", grid_csv, "Also write E_NN over a grid of t to this CSV");
    moments->add_option("--t-max", t_max, "Largest t of the CSV grid")->check(CLI::PositiveNumber);
    moments->add_option("--t-steps", t_steps, "Points in the CSV grid")->check(CLI::PositiveNumber);

    // estimate -------------------------------------------------------------
    auto* estimate = app.add_subcommand("estimate", "Maximum-likelihood fit");
    bool no_se = false;
    std::string surface_csv;
    estimate->add_option("--events", events_path, "Event CSV")->required()->check(CLI::ExistingFile);
    estimate->add_option("--dim", dim, "Number of event types")->check(CLI::PositiveNumber);
    estimate->add_option("--kernels", kernels, "Kernel count K")->check(CLI::PositiveNumber);
    estimate->add_option("--profile", profile, "sym2 | markov | full | scalar");
    estimate->add_option("--method", method, "profile | direct")->check(CLI::IsMember({"profile", "direct"}));
    estimate->add_option("--points", points, "Profile grid points per decay axis")->check(CLI::Range(2, 1000));
    estimate->add_option("--beta-min", beta_min, "Smallest grid decay (default from data)");
    estimate->add_option("--beta-max", beta_max, "Largest grid decay (default from data)");
    estimate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    estimate->add_option("--start-ns", start_ns, "Observation start (default: first event)");
    estimate->add_option("--end-ns", end_ns, "Observation end (default: last event)");
    estimate->add_flag("--no-se", no_se, "Skip standard errors");
    estimate->add_option("--surface-csv", surface_csv, "Write the profile surface to this CSV");
    estimate->add_option("--out", out_path, "Output fit JSON (default stdout)");

    // scan -----------------------------------------------------------------
    auto* scan = app.add_subcommand("scan", "Conditional maximum L*(beta) over a decay grid");
    std::string scan_profile = "scalar";
    scan->add_option("--events", events_path, "Event CSV")->required()->check(CLI::ExistingFile);
    scan->add_option("--dim", dim, "Number of event types")->check(CLI::PositiveNumber);
    scan->add_option("--kernels", kernels, "Kernel count (1 or 2 shared-decay kernels)")->check(CLI::Range(1, 3));
    scan->add_option("--profile", scan_profile, "scalar | sym2");
    scan->add_option("--beta-min", beta_min, "Smallest decay")->required()->check(CLI::PositiveNumber);
    scan->add_option("--beta-max", beta_max, "Largest decay")->required()->check(CLI::PositiveNumber);
    scan->add_option("--points", points, "Points per axis")->check(CLI::Range(2, 10000));
    scan->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    scan->add_option("--start-ns", start_ns, "Observation start (default: first event)");
    scan->add_option("--end-ns", end_ns, "Observation end (default: last event)");
    scan->add_option("--out", out_path, "Surface CSV (default stdout)");

    // diagnose -------------------------------------------------------------
    auto* diagnose = app.add_subcommand("diagnose", "Time-rescaling residuals, Q-Q table and KS test");
    std::string qq_csv;
    diagnose->add_option("--params", params_path, "Fit or parameter JSON")->required()->check(CLI::ExistingFile);
    diagnose->add_option("--events", events_path, "Event CSV")->required()->check(CLI::ExistingFile);
    diagnose->add_option("--start-ns", start_ns, "Observation start (default: first event)");
    diagnose->add_option("--end-ns", end_ns, "Observation end (default: last event)");
    diagnose->add_option("--qq", qq_csv, "Write the pooled Q-Q table to this CSV");
    diagnose->add_option("--out", out_path, "Output JSON (default stdout)");

    // respond --------------------------------------------------------------
    auto* respond = app.add_subcommand("respond", "Per-kernel arrival probability and expected response time");
    bool normalized = false;
    respond->add_option("--params", params_path, "Fit or parameter JSON")->required()->check(CLI::ExistingFile);
    respond->add_flag("--normalized", normalized, "Divide the expected time by P(tau < inf)");
    respond->add_option("--out", out_path, "Output CSV (default stdout)");

    // attribute ------------------------------------------------------------
    auto* attribute = app.add_subcommand("attribute", "Share of each event's intensity by cause");
    attribute->add_option("--params", params_path, "Fit or parameter JSON")->required()->check(CLI::ExistingFile);
    attribute->add_option("--events", events_path, "Event CSV")->required()->check(CLI::ExistingFile);
    attribute->add_option("--start-ns", start_ns, "Observation start (default: first event)");
    attribute->add_option("--end-ns", end_ns, "Observation end (default: last event)");
    attribute->add_option("--out", out_path, "Output CSV (default stdout)");

    // experiment success-rate ---------------------------------------------
    auto* experiment = app.add_subcommand("experiment", "Simulation experiments");
    experiment->require_subcommand(1);
    auto* success = experiment->add_subcommand("success-rate", "Unique-local-maximum rate of the profile likelihood");
    std::vector<double> branchings{0.1, 0.5, 0.9};
    std::vector<std::size_t> sizes{150, 500};
    int reps = 20, per_decade = 15;
    success->add_option("--branching", branchings, "Branching ratios");
    success->add_option("--sizes", sizes, "Event counts per path");
    success->add_option("--reps", reps, "Replications per cell")->check(CLI::PositiveNumber);
    success->add_option("--seed", seed, "Master seed")->required();
    success->add_option("--points-per-decade", per_decade, "Decay grid density")->check(CLI::PositiveNumber);
    success->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    success->add_option("--out", out_path, "Output CSV (default stdout)");

    // batch ----------------------------------------------------------------
    auto* batch = app.add_subcommand("batch", "Fit every daily event file matching a glob");
    std::string pattern, summary_csv;
    batch->add_option("--glob", pattern, "Event file pattern, e.g. 'days/*.csv'")->required();
    batch->add_option("--dim", dim, "Number of event types")->check(CLI::PositiveNumber);
    batch->add_option("--kernels", kernels, "Kernel count K")->check(CLI::PositiveNumber);
    batch->add_option("--profile", profile, "sym2 | markov | full | scalar");
    batch->add_option("--method", method, "profile | direct")->check(CLI::IsMember({"profile", "direct"}));
    batch->add_option("--points", points, "Profile grid points per decay axis")->check(CLI::Range(2, 1000));
    batch->add_option("--threads", threads, "Worker threads (across files)")->check(CLI::PositiveNumber);
    batch->add_option("--summary-csv", summary_csv, "Write mean/median/SD per parameter to this CSV");
    batch->add_option("--out", out_path, "Output JSON (default stdout)");

    auto* manual = app.add_subcommand("manual", "Print the full manual of every subcommand");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (manual->parsed()) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        }
        const auto start = detail::opt_ns(start_ns);
        const auto end = detail::opt_ns(end_ns);

        if (ingest->parsed()) {
            const auto qf = read_quotes_file(quotes_path);
            const auto r = mid_price_events(qf.quotes, detail::parse_session(session));
            write_events_file(out_path, r.stream);
            json rep{{"schema_version", kSchemaVersion},
                     {"events", r.stream.size()},
                     {"quotes_used", r.quotes_used},
                     {"crossed_dropped", r.crossed_dropped},
                     {"collapsed", r.dedupe.collapsed},
                     {"shifted", r.dedupe.shifted},
                     {"row_errors", json::array()}};
            for (const auto& e : qf.errors) rep["row_errors"].push_back({{"line", e.line}, {"message", e.message}});
            out << rep.dump(2) << '\n';
            return 0;
        }

        if (simulate->parsed()) {
            const auto p = read_params_file(params_path);
            SimConfig cfg;
            cfg.horizon_s = horizon;
            cfg.n_paths = paths;
            cfg.seed = seed;
            cfg.init = init == "burnin" ? InitMode::zero_with_burn_in : InitMode::stationary_mean;
            cfg.burn_in_s = burn_in;
            cfg.max_events = max_events;
            cfg.threads = static_cast<unsigned>(threads);
            if (detail::ends_with(out_path, ".csv")) {
                if (paths != 1) throw UsageError("event CSV output needs --paths 1; use a .json summary for ensembles");
                write_events_file(out_path, simulate_path(p, cfg, derive_seed(seed, 0)));
                return 0;
            }
            const auto s = simulate_ensemble(p, cfg);
            detail::emit(out_path, out, [&](std::ostream& o) { o << to_json(s).dump(2) << '\n'; });
            return 0;
        }

        if (moments->parsed()) {
            const auto p = read_params_file(params_path);
            const auto r = compute_moments(p);
            detail::emit(out_path, out, [&](std::ostream& o) { o << to_json(r, horizons).dump(2) << '\n'; });
            if (!grid_csv.empty()) {
                if (!(t_max > 0.0)) throw UsageError("--grid-csv needs --t-max");
                std::ofstream g(grid_csv);
                if (!g) throw ParseError("cannot write " + grid_csv);
                const int m = p.dim();
                g << "t";
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) g << ",E_NN_" << (i + 1) << (j + 1);
                g << '\n' << std::setprecision(12);
                for (int q = 1; q <= t_steps; ++q) {
                    const double t = t_max * q / t_steps;
                    const auto E = r.E_NN(t);
                    g << t;
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < m; ++j) g << ',' << E(i, j);
                    g << '\n';
                }
            }
            return 0;
        }

        if (estimate->parsed()) {
            const auto prof = detail::parse_profile(profile);
            const auto s = read_events_file(events_path, dim, start, end);
            FitResult r;
            if (method == "direct") {
                DirectOptions o;
                o.compute_se = !no_se;
                r = fit_direct(s, kernels, prof, std::nullopt, o);
            } else {
                ProfileOptions o;
                o.points_per_axis = points;
                o.beta_min = beta_min;
                o.beta_max = beta_max;
                o.threads = static_cast<unsigned>(threads);
                o.compute_se = !no_se;
                r = fit_profile(s, kernels, prof, o);
            }
            if (!surface_csv.empty())
                detail::emit(surface_csv, out, [&](std::ostream& o) { detail::write_surface_csv(o, r.profile_surface); });
            detail::emit(out_path, out, [&](std::ostream& o) { o << to_json(r).dump(2) << '\n'; });
            return 0;
        }

        if (scan->parsed()) {
            if (!(beta_max > beta_min)) throw UsageError("--beta-max must exceed --beta-min");
            const auto prof = detail::parse_profile(scan_profile);
            const auto s = read_events_file(events_path, dim, start, end);
            const FreeLayout layout(prof, s.dim, kernels);
            if (!layout.scalar_beta()) throw UsageError("scan supports shared-decay profiles (scalar, sym2)");
            std::vector<std::vector<double>> axes(static_cast<std::size_t>(layout.n_beta()),
                                                  log_space(beta_min, beta_max, points));
            const auto r = scan_conditional_max(s, kernels, prof, axes, true, static_cast<unsigned>(threads));
            detail::emit(out_path, out, [&](std::ostream& o) { detail::write_scan_csv(o, r); });
            err << "local_maxima=" << r.local_maxima << " interior_maxima=" << r.interior_maxima << '\n';
            return 0;
        }

        if (diagnose->parsed()) {
            const auto p = read_params_file(params_path);
            const auto s = read_events_file(events_path, p.dim(), start, end);
            const auto res = residuals(p, s);
            json j{{"schema_version", kSchemaVersion}, {"per_type", json::array()}};
            for (std::size_t i = 0; i < res.per_type.size(); ++i) {
                json t{{"type", i + 1}, {"n", res.per_type[i].size()}, {"compensator", res.compensator_total[i]}};
                if (!res.per_type[i].empty()) {
                    const auto ks = ks_exponential(res.per_type[i]);
                    t["ks_statistic"] = ks.statistic;
                    t["ks_p_value"] = ks.p_value;
                }
                j["per_type"].push_back(t);
            }
            if (res.pooled.empty()) throw InvalidStream("no residuals: every type needs at least two events");
            const auto ks = ks_exponential(res.pooled);
            const auto qq = qq_exponential(res.pooled);
            j["pooled"] = {{"n", ks.n},
                           {"ks_statistic", ks.statistic},
                           {"ks_p_value", ks.p_value},
                           {"qq_max_deviation", qq_max_deviation(qq)}};
            if (!qq_csv.empty())
                detail::emit(qq_csv, out, [&](std::ostream& o) {
                    o << "empirical,exponential\n" << std::setprecision(12);
                    for (const auto& pt : qq) o << pt.empirical << ',' << pt.theoretical << '\n';
                });
            detail::emit(out_path, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
            return 0;
        }

        if (respond->parsed()) {
            const auto p = read_params_file(params_path);
            const auto rows = responsiveness(p, normalized);
            detail::emit(out_path, out, [&](std::ostream& o) {
                o << "kernel,target,source,relation,alpha,beta,p_finite,e_tau_s,e_tau_us\n" << std::setprecision(10);
                for (const auto& r : rows)
                    o << (r.kernel + 1) << ',' << (r.target + 1) << ',' << (r.source + 1) << ',' << r.relation << ','
                      << r.alpha << ',' << r.beta << ',' << r.p_finite << ',' << r.e_tau << ',' << r.e_tau * 1e6
                      << '\n';
            });
            return 0;
        }

        if (attribute->parsed()) {
            const auto p = read_params_file(params_path);
            const auto s = read_events_file(events_path, p.dim(), start, end);
            const auto r = attribute_causes(p, s);
            detail::emit(out_path, out, [&](std::ostream& o) {
                o << "scope,n_events,base_pct";
                for (int k = 0; k < p.kernels(); ++k) o << ",kernel" << (k + 1) << "_pct";
                o << '\n' << std::setprecision(8);
                auto row = [&](const std::string& name, const AttributionRow& a) {
                    o << name << ',' << a.n_events << ',' << 100.0 * a.share_base;
                    for (double v : a.share_kernel) o << ',' << 100.0 * v;
                    o << '\n';
                };
                for (std::size_t i = 0; i < r.per_type.size(); ++i) row("type_" + std::to_string(i + 1), r.per_type[i]);
                row("pooled", r.pooled);
            });
            return 0;
        }

        if (success->parsed()) {
            SuccessRateOptions o;
            o.points_per_decade = per_decade;
            o.threads = static_cast<unsigned>(threads);
            const auto rows = success_rate_experiment(branchings, sizes, reps, seed, o);
            detail::emit(out_path, out, [&](std::ostream& os) {
                os << "branching,n,rate,successes,reps\n";
                for (const auto& r : rows)
                    os << r.branching << ',' << r.n << ',' << r.rate() << ',' << r.successes << ',' << r.reps << '\n';
            });
            return 0;
        }

        if (batch->parsed()) {
            const auto files = expand_glob(pattern);
            if (files.empty()) throw UsageError("no files match " + pattern);
            BatchConfig cfg;
            cfg.kernels = kernels;
            cfg.profile = detail::parse_profile(profile);
            cfg.direct = method == "direct";
            cfg.dim = dim;
            cfg.profile_options.points_per_axis = points;
            cfg.threads = static_cast<unsigned>(threads);
            const auto r = batch_daily(files, cfg);
            json j{{"schema_version", kSchemaVersion}, {"days", json::array()}, {"summary", json::array()}};
            for (const auto& d : r.days) {
                json dj{{"path", d.path}};
                if (d.fit) dj["fit"] = to_json(*d.fit, false);
                else dj["error"] = d.error;
                j["days"].push_back(dj);
            }
            for (const auto& s : r.summary)
                j["summary"].push_back({{"name", s.name}, {"n", s.n}, {"mean", s.mean}, {"median", s.median}, {"sd", s.sd}});
            j["failures"] = r.failures();
            detail::emit(out_path, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
            if (!summary_csv.empty())
                detail::emit(summary_csv, out, [&](std::ostream& o) {
                    o << "parameter,n,mean,median,sd\n" << std::setprecision(10);
                    for (const auto& s : r.summary)
                        o << s.name << ',' << s.n << ',' << s.mean << ',' << s.median << ',' << s.sd << '\n';
                });
            return 0;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << json{{"error", std::string(e.kind())}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 2;
}

} // namespace mkhawkes::cli
