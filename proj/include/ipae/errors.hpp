#pragma once

#include <stdexcept>
#include <string>

namespace ipae {

/// Operand dimensions do not fit together.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A precondition on values (not shapes) was violated by the caller.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value that must be finite was not, or left its admissible range.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file parsed but its content is not in the expected format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration field is missing, unknown or out of range. field() names it.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string field, const std::string& what)
        : std::invalid_argument("config field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace ipae
