#ifndef BUZZLOAD_ERRORS_HPP
#define BUZZLOAD_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace buzzload {

// Root of every error thrown by the library. The CLI maps these to exit
// status 1; usage errors are reported separately by the argument parser.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (invalid state, bad parameter).
class ContractError : public Error {
public:
  using Error::Error;
};

// Mean workload does not exist: the flow-balance denominator is <= 0.
class InstabilityError : public Error {
public:
  explicit InstabilityError(double denominator);
  double denominator() const { return denominator_; }

private:
  double denominator_;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// Iterative numerics failed (e.g. power iteration hit its cap).
class NumericalError : public Error {
public:
  NumericalError(const std::string& what, double residual);
  double residual() const { return residual_; }

private:
  double residual_;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class RangeError : public Error {
public:
  using Error::Error;
};

class ResourceError : public Error {
public:
  using Error::Error;
};

// Raised by the estimation pipeline; carries the stage that failed.
class EstimationError : public Error {
public:
  EstimationError(std::string stage, const std::string& what);
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

}  // namespace buzzload

#endif  // BUZZLOAD_ERRORS_HPP
