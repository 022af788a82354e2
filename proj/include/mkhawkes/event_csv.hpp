#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "event_stream.hpp"

namespace mkhawkes {

namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = line.find(sep, pos);
        out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace csv

/// Reads `timestamp_ns,type` rows (types 1-based). The observation window
/// defaults to [first event, last event].
[[nodiscard]] inline EventStream read_events(std::istream& in, int dim = 2,
                                             std::optional<std::int64_t> start_ns = std::nullopt,
                                             std::optional<std::int64_t> end_ns = std::nullopt) {
    if (dim < 1) throw InvalidParameter("dimension must be at least 1");
    EventStream s;
    s.dim = dim;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = csv::trim(line);
        if (t.empty()) continue;
        const auto f = csv::split(t);
        if (!header) {
            if (f.size() != 2 || f[0] != "timestamp_ns" || f[1] != "type")
                throw ParseError("line " + std::to_string(line_no) + ": expected header 'timestamp_ns,type'");
            header = true;
            continue;
        }
        std::int64_t ts = 0;
        int type = 0;
        if (f.size() != 2 || !csv::parse_int(f[0], ts) || !csv::parse_int(f[1], type))
            throw ParseError("line " + std::to_string(line_no) + ": malformed event row");
        if (type < 1 || type > dim)
            throw ParseError("line " + std::to_string(line_no) + ": type " + std::to_string(type) + " outside [1, " +
                             std::to_string(dim) + "]");
        s.events.push_back({ts, type - 1});
    }
    if (!header) throw ParseError("missing header 'timestamp_ns,type'");
    s.start_ns = start_ns ? *start_ns : (s.events.empty() ? 0 : s.events.front().t_ns);
    s.horizon_ns = end_ns ? *end_ns : (s.events.empty() ? s.start_ns : s.events.back().t_ns);
    s.validate();
    return s;
}

[[nodiscard]] inline EventStream read_events_file(const std::string& path, int dim = 2,
                                                  std::optional<std::int64_t> start_ns = std::nullopt,
                                                  std::optional<std::int64_t> end_ns = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return read_events(in, dim, start_ns, end_ns);
}

inline void write_events(std::ostream& out, const EventStream& s) {
    out << "timestamp_ns,type\n";
    for (const auto& e : s.events) out << e.t_ns << ',' << (e.type + 1) << '\n';
}

inline void write_events_file(const std::string& path, const EventStream& s) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    write_events(out, s);
}

} // namespace mkhawkes
