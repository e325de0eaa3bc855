#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adr {

// Validation-class errors map to CLI exit code 2; everything else is a
// runtime failure (exit code 1).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidParameter : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidInput : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SizeLimitError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ReferentialError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class OrderingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SingularConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace adr
