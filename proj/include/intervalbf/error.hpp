#ifndef INTERVALBF_ERROR_HPP
#define INTERVALBF_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace intervalbf {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the domain of an operation (bad ν, sd = 0, p outside
/// (0, 2), malformed partition, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller combined valid pieces in an unsupported way (κ-threshold rule on an
/// m > 2 partition, dimension mismatch between phases, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed registry input. Carries the 1-based data row (0 for the header)
/// and the offending field.
class ParseError : public DomainError {
 public:
  ParseError(std::size_t row, std::string field, const std::string& what)
      : DomainError("row " + std::to_string(row) + ", field '" + field +
                    "': " + what),
        row_(row),
        field_(std::move(field)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t row_;
  std::string field_;
};

/// Numerical failure: adaptive quadrature ran out of subdivisions, or an
/// iteration failed to converge. Carries the best partial value available.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double partial_value,
                   double error_estimate)
      : Error(what), partial_(partial_value), err_(error_estimate) {}

  double partial_value() const noexcept { return partial_; }
  double error_estimate() const noexcept { return err_; }

 private:
  double partial_;
  double err_;
};

/// find_root was handed an interval without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

}  // namespace intervalbf

#endif  // INTERVALBF_ERROR_HPP
