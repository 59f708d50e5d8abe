#pragma once

#include <stdexcept>
#include <string>

namespace goldilocks {

/// Malformed input file: message carries the offending field or line.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& message, std::string field)
        : std::runtime_error(field.empty() ? message : message + " (at " + field + ")"),
          field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Integration produced a non-finite state; carries the offending time.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& message, double time)
        : std::runtime_error(message + " at t = " + std::to_string(time) + " ps"),
          time_(time) {}

    double time() const { return time_; }

private:
    double time_;
};

} // namespace goldilocks
