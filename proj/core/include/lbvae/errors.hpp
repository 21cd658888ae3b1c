#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace lbvae {

/// Invalid dimensions, ranges or flag values supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. S_ij >= 1).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A factorization or iteration broke down. Carries the iteration index when
/// the failure happened inside an iterative procedure.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string &what, std::optional<long> iteration = std::nullopt)
        : std::runtime_error(iteration ? what + " (iteration " + std::to_string(*iteration) + ")" : what),
          iteration_(iteration) {}

    [[nodiscard]] std::optional<long> iteration() const noexcept { return iteration_; }

private:
    std::optional<long> iteration_;
};

/// A quantity is degenerate in a way that makes a score undefined
/// (zero variance, entropy below the floor).
class DegeneracyError : public std::runtime_error {
public:
    explicit DegeneracyError(const std::string &what, std::optional<long> index = std::nullopt)
        : std::runtime_error(what), index_(index) {}

    [[nodiscard]] std::optional<long> index() const noexcept { return index_; }

private:
    std::optional<long> index_;
};

/// Operation called in a state that does not support it (missing history, empty input).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed input file. Line numbers are 1-based and count the header.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string &what, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace lbvae
