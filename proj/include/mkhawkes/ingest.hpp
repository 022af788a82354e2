#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "event_csv.hpp"
#include "event_stream.hpp"

namespace mkhawkes {

/// Prices are fixed-point integers with nine decimal places.
inline constexpr std::int64_t kPriceScale = 1'000'000'000;

/// Parses a non-negative decimal such as "100.015" exactly.
[[nodiscard]] inline std::optional<std::int64_t> parse_decimal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    const auto dot = s.find('.');
    const auto whole = s.substr(0, dot);
    std::int64_t w = 0;
    if (whole.empty()) {
        if (dot == std::string_view::npos) return std::nullopt;
    } else if (!csv::parse_int(whole, w) || w < 0 || whole.front() == '+') {
        return std::nullopt;
    }
    if (w > std::numeric_limits<std::int64_t>::max() / kPriceScale - 1) return std::nullopt;
    std::int64_t frac = 0;
    if (dot != std::string_view::npos) {
        auto f = s.substr(dot + 1);
        while (f.size() > 9 && f.back() == '0') f.remove_suffix(1);
        if (f.size() > 9 || (f.empty() && whole.empty())) return std::nullopt;
        for (char c : f) {
            if (c < '0' || c > '9') return std::nullopt;
            frac = frac * 10 + (c - '0');
        }
        for (auto n = f.size(); n < 9; ++n) frac *= 10;
    }
    return w * kPriceScale + frac;
}

struct QuoteRecord {
    std::int64_t t_ns{0};
    std::int64_t bid{0};  // scaled by kPriceScale
    std::int64_t ask{0};
};

struct RowError {
    std::size_t line{0};
    std::string message;
};

struct QuoteFile {
    std::vector<QuoteRecord> quotes;
    std::vector<RowError> errors;
};

/// Reads `timestamp_ns,bid,ask`. Malformed rows and rows that go back in time
/// are reported with their line numbers and skipped.
[[nodiscard]] inline QuoteFile read_quotes(std::istream& in) {
    QuoteFile out;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = csv::trim(line);
        if (t.empty()) continue;
        const auto f = csv::split(t);
        if (!header) {
            if (f.size() != 3 || f[0] != "timestamp_ns" || f[1] != "bid" || f[2] != "ask")
                throw ParseError("line " + std::to_string(line_no) + ": expected header 'timestamp_ns,bid,ask'");
            header = true;
            continue;
        }
        QuoteRecord q;
        std::optional<std::int64_t> bid, ask;
        if (f.size() != 3 || !csv::parse_int(f[0], q.t_ns) || !(bid = parse_decimal(f[1])) ||
            !(ask = parse_decimal(f[2]))) {
            out.errors.push_back({line_no, "malformed quote row"});
            continue;
        }
        q.bid = *bid;
        q.ask = *ask;
        if (!out.quotes.empty() && q.t_ns < out.quotes.back().t_ns) {
            out.errors.push_back({line_no, "timestamp goes backwards"});
            continue;
        }
        out.quotes.push_back(q);
    }
    if (!header) throw ParseError("missing header 'timestamp_ns,bid,ask'");
    return out;
}

[[nodiscard]] inline QuoteFile read_quotes_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return read_quotes(in);
}

/// Half-open session window [start, end); unset ends are unbounded.
struct SessionWindow {
    std::optional<std::int64_t> start_ns;
    std::optional<std::int64_t> end_ns;

    [[nodiscard]] bool contains(std::int64_t t) const {
        return (!start_ns || t >= *start_ns) && (!end_ns || t < *end_ns);
    }
};

struct DedupeStats {
    std::size_t collapsed{0};
    std::size_t shifted{0};
};

/// Makes timestamps strictly increasing: events of the same type at the same
/// timestamp collapse to one; a different type at an occupied timestamp is
/// moved to one nanosecond after its predecessor, keeping file order.
[[nodiscard]] inline std::vector<Event> dedupe_and_order(const std::vector<Event>& raw, DedupeStats* stats = nullptr) {
    std::vector<Event> out;
    out.reserve(raw.size());
    DedupeStats st;
    std::int64_t group_t = std::numeric_limits<std::int64_t>::min();
    std::vector<int> group_types;
    for (const auto& e : raw) {
        if (e.t_ns != group_t) {
            group_t = e.t_ns;
            group_types.clear();
        }
        bool dup = false;
        for (int ty : group_types) dup = dup || ty == e.type;
        if (dup) {
            ++st.collapsed;
            continue;
        }
        group_types.push_back(e.type);
        std::int64_t t = e.t_ns;
        if (!out.empty() && t <= out.back().t_ns) {
            t = out.back().t_ns + 1;
            ++st.shifted;
        }
        out.push_back({t, e.type});
    }
    if (stats) *stats = st;
    return out;
}

struct IngestResult {
    EventStream stream;
    std::size_t quotes_used{0};
    std::size_t crossed_dropped{0};
    std::size_t raw_events{0};
    DedupeStats dedupe;
};

/// Up/down mid-price events (type 0 = up, type 1 = down; written 1 and 2).
/// Each strict change of (bid + ask) emits one event whatever its size.
[[nodiscard]] inline IngestResult mid_price_events(const std::vector<QuoteRecord>& quotes,
                                                   const SessionWindow& window = {}) {
    IngestResult r;
    std::vector<Event> raw;
    std::optional<std::int64_t> last_sum;
    std::optional<std::int64_t> first_t, last_t;
    for (const auto& q : quotes) {
        if (!window.contains(q.t_ns)) continue;
        if (!first_t) first_t = q.t_ns;
        last_t = q.t_ns;
        if (q.ask < q.bid || q.bid <= 0) {
            ++r.crossed_dropped;
            continue;
        }
        ++r.quotes_used;
        const std::int64_t sum = q.bid + q.ask;
        if (last_sum && sum != *last_sum) raw.push_back({q.t_ns, sum > *last_sum ? 0 : 1});
        last_sum = sum;
    }
    r.raw_events = raw.size();
    r.stream.dim = 2;
    r.stream.events = dedupe_and_order(raw, &r.dedupe);
    r.stream.start_ns = window.start_ns ? *window.start_ns : first_t.value_or(0);
    std::int64_t end = window.end_ns ? *window.end_ns : last_t.value_or(r.stream.start_ns);
    if (!r.stream.events.empty()) end = std::max(end, r.stream.events.back().t_ns);
    r.stream.horizon_ns = end;
    r.stream.validate();
    return r;
}

} // namespace mkhawkes
