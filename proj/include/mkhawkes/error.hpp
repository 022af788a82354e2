#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mkhawkes {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the command-line front end.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    [[nodiscard]] std::string_view kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct InvalidParameter : Error {
    explicit InvalidParameter(const std::string& what) : Error("invalid_parameter", what) {}
};

struct NonStationary : Error {
    explicit NonStationary(const std::string& what) : Error("non_stationary", what) {}
};

struct DegenerateModel : Error {
    explicit DegenerateModel(const std::string& what) : Error("degenerate_model", what) {}
};

struct RunawaySimulation : Error {
    explicit RunawaySimulation(const std::string& what) : Error("runaway_simulation", what) {}
};

struct InvalidStream : Error {
    explicit InvalidStream(const std::string& what) : Error("invalid_stream", what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error("parse_error", what) {}
};

struct OptimizationFailure : Error {
    explicit OptimizationFailure(const std::string& what) : Error("optimization_failure", what) {}
};

} // namespace mkhawkes
