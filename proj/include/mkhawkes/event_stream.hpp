#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace mkhawkes {

inline constexpr double kSecondsPerNano = 1e-9;

/// One event: integer nanosecond timestamp and a 0-based type index.
/// Files carry 1-based types; conversion happens in the CSV layer.
struct Event {
    std::int64_t t_ns{0};
    int type{0};

    friend bool operator==(const Event&, const Event&) = default;
};

/// Time-sorted events observed on the window [start_ns, horizon_ns].
/// All model arithmetic uses seconds relative to `start_ns`.
struct EventStream {
    int dim{2};
    std::int64_t start_ns{0};
    std::int64_t horizon_ns{0};
    std::vector<Event> events;

    [[nodiscard]] std::size_t size() const { return events.size(); }
    [[nodiscard]] bool empty() const { return events.empty(); }

    [[nodiscard]] double seconds(std::int64_t t_ns) const {
        return static_cast<double>(t_ns - start_ns) * kSecondsPerNano;
    }
    [[nodiscard]] double time(std::size_t n) const { return seconds(events[n].t_ns); }
    [[nodiscard]] double horizon() const { return seconds(horizon_ns); }

    [[nodiscard]] std::vector<std::size_t> counts() const {
        std::vector<std::size_t> c(static_cast<std::size_t>(dim), 0);
        for (const auto& e : events) ++c[static_cast<std::size_t>(e.type)];
        return c;
    }

    /// Throws InvalidStream unless timestamps are strictly increasing, inside
    /// the window, and every type lies in [0, dim).
    void validate() const {
        if (dim < 1) throw InvalidStream("stream dimension must be at least 1");
        if (horizon_ns < start_ns) throw InvalidStream("horizon precedes stream start");
        std::int64_t prev = start_ns - 1;
        for (std::size_t n = 0; n < events.size(); ++n) {
            const auto& e = events[n];
            if (e.type < 0 || e.type >= dim)
                throw InvalidStream("event " + std::to_string(n) + " has type outside [1, m]");
            if (e.t_ns <= prev)
                throw InvalidStream("event " + std::to_string(n) + " is not strictly after its predecessor");
            prev = e.t_ns;
        }
        if (!events.empty() && events.back().t_ns > horizon_ns)
            throw InvalidStream("last event lies beyond the horizon");
    }
};

} // namespace mkhawkes
