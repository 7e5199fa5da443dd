#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mspin {

inline constexpr std::string_view kToolName = "marketspin";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data; carries a 1-based line number
/// when the problem is tied to a specific input line (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Invalid configuration (CLI flags, walk parameters, oracle cap).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Partitioning produced nothing to analyze.
class NoWindowsError : public Error {
public:
    NoWindowsError() : Error("no analyzable windows") {}
};

/// Degenerate fit input: zero densities in range, too few points,
/// or no admissible breakpoint.
class FitError : public Error {
public:
    using Error::Error;
};

} // namespace mspin
