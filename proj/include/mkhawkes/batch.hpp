#pragma once

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "estimate.hpp"
#include "event_csv.hpp"
#include "parallel.hpp"

namespace mkhawkes {

/// Sorted paths matching a shell glob pattern (empty when nothing matches).
[[nodiscard]] inline std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    ::globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

struct DayFit {
    std::string path;
    std::optional<FitResult> fit;
    std::string error;
};

struct ParameterSummary {
    std::string name;
    std::size_t n{0};
    double mean{0.0};
    double median{0.0};
    double sd{0.0};
};

struct BatchResult {
    std::vector<DayFit> days;
    std::vector<ParameterSummary> summary;
    [[nodiscard]] std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(days.begin(), days.end(), [](const DayFit& d) { return !d.fit; }));
    }
};

struct BatchConfig {
    int kernels{2};
    ConstraintProfile profile{ConstraintProfile::symmetric_bivariate};
    bool direct{false};
    int dim{2};
    ProfileOptions profile_options{};
    unsigned threads{1};
};

/// Mean, median and sample SD of each free parameter across the fitted days.
[[nodiscard]] inline std::vector<ParameterSummary> summarize_fits(const std::vector<DayFit>& days) {
    std::vector<ParameterSummary> out;
    const FitResult* first = nullptr;
    for (const auto& d : days)
        if (d.fit) {
            first = &*d.fit;
            break;
        }
    if (!first) return out;
    for (std::size_t q = 0; q < first->names.size(); ++q) {
        std::vector<double> v;
        for (const auto& d : days)
            if (d.fit) v.push_back(d.fit->estimates[static_cast<Eigen::Index>(q)]);
        ParameterSummary s;
        s.name = first->names[q];
        s.n = v.size();
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        const auto h = v.size() / 2;
        s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(s);
    }
    return out;
}

/// Fits every file independently. A file that fails to parse or fit is
/// recorded with its error and the batch continues.
[[nodiscard]] inline BatchResult batch_daily(const std::vector<std::string>& files, const BatchConfig& cfg) {
    if (files.empty()) throw InvalidParameter("no input files");
    BatchResult r;
    r.days.resize(files.size());
    ProfileOptions po = cfg.profile_options;
    po.threads = 1;
    parallel_for(files.size(), cfg.threads, [&](std::size_t q) {
        DayFit& d = r.days[q];
        d.path = files[q];
        try {
            const auto s = read_events_file(files[q], cfg.dim);
            d.fit = cfg.direct ? fit_direct(s, cfg.kernels, cfg.profile) : fit_profile(s, cfg.kernels, cfg.profile, po);
        } catch (const std::exception& e) {
            d.error = e.what();
        }
    });
    r.summary = summarize_fits(r.days);
    return r;
}

} // namespace mkhawkes
