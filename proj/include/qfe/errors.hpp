#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qfe {

/// Argument outside the domain of a mathematical operation (zero divisor,
/// non-unit input to a unit-only map, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Logarithm requested at the antipodal point -1, where the axis is undefined.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Non-finite values reached a filter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Innovation covariance became singular or ill-conditioned.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Invalid scenario or estimator configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed file whose content violates the schema (e.g. non-monotone index).
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace qfe
