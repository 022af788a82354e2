#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string_view>

namespace mkhawkes {

using WarningHandler = std::function<void(std::string_view)>;

namespace detail {
inline WarningHandler& warning_handler_slot() {
    static WarningHandler handler = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return handler;
}
inline std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Replaces the process-wide warning sink. Passing an empty handler silences warnings.
inline void set_warning_handler(WarningHandler h) {
    std::lock_guard lock(detail::warning_mutex());
    detail::warning_handler_slot() = std::move(h);
}

inline void warn(std::string_view msg) {
    std::lock_guard lock(detail::warning_mutex());
    if (auto& h = detail::warning_handler_slot()) h(msg);
}

} // namespace mkhawkes
