#pragma once

#include <stdexcept>
#include <string>

namespace rblab {

/// Caller broke a precondition (shape mismatch, out-of-range index, bad option).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a diverged computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A statistic that has no value on the given data (zero variance and the like).
class UndefinedStatistic : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CorruptFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed bracket string; `position` is the index of the first offending token
/// (equal to the sequence length when brackets are left open).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at token " + std::to_string(position)), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Bad configuration document; the CLI maps this to exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rblab
