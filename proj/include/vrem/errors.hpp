#pragma once

#include <stdexcept>
#include <string>

namespace vrem {

// Bad call-site input: indices out of range, b > n without replacement, ...
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A statistic outside the set where the M-step map is defined. `constraint`
// names the violated condition ("empty component", "degenerate covariance").
class DomainError : public std::domain_error {
 public:
  DomainError(std::string constraint, const std::string& detail)
      : std::domain_error(constraint + ": " + detail), constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t col)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", column " +
                           std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace vrem
