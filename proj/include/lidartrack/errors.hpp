#ifndef LIDARTRACK_ERRORS_HPP
#define LIDARTRACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lidartrack {

/// Precondition of an operation was not met by the caller.
class ContractViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Input file does not match the expected binary layout.
class MalformedFile : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Text input could not be parsed; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Not enough (or degenerate) data to fit a model.
class DegenerateInput : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Filter update hit a singular or ill-conditioned matrix.
class NumericallyDegenerate : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A measurement was rejected (non-finite values); the state is left untouched.
class InvalidMeasurement : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lidartrack

#endif  // LIDARTRACK_ERRORS_HPP
