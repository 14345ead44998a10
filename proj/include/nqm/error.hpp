#pragma once

#include <stdexcept>
#include <string>

namespace nqm {

/// Failure category; the CLI maps each one to its exit code.
enum class ErrorKind { Validation = 2, Numeric = 3, Io = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string field, const std::string& message)
        : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Name of the offending input, empty when no single field is at fault.
    const std::string& field() const noexcept { return field_; }

private:
    ErrorKind kind_;
    std::string field_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(ErrorKind::Validation, std::move(field), message) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message, std::string field = {})
        : Error(ErrorKind::Numeric, std::move(field), message) {}
};

class IoError : public Error {
public:
    IoError(std::string path, const std::string& message)
        : Error(ErrorKind::Io, std::move(path), message) {}
};

}  // namespace nqm
