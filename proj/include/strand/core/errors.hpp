#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace strand {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flow/config/criterion document could not be parsed. Carries a 1-based
/// source position when one is known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0, std::size_t column = 0)
        : Error(line ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                     : message),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class InvalidFlow : public Error { using Error::Error; };
class UnsatisfiableInput : public Error { using Error::Error; };
class CoverageGap : public Error { using Error::Error; };
class EmptySample : public Error { using Error::Error; };
class ModelFailure : public Error { using Error::Error; };
class Divergence : public ModelFailure { using ModelFailure::ModelFailure; };
class UnknownParent : public Error { using Error::Error; };
class DuplicateId : public Error { using Error::Error; };
class UnknownInstance : public Error { using Error::Error; };
class UnknownRun : public Error { using Error::Error; };
class InconsistentInput : public Error { using Error::Error; };
class TooLarge : public Error { using Error::Error; };
class UnknownVariable : public Error { using Error::Error; };

}  // namespace strand
