#include "buzzload/errors.hpp"

#include <sstream>

namespace buzzload {

namespace {
std::string instability_message(double denominator) {
  std::ostringstream os;
  os << "unstable parameters: mean-workload denominator " << denominator << " <= 0";
  return os.str();
}
}  // namespace

InstabilityError::InstabilityError(double denominator)
    : Error(instability_message(denominator)), denominator_(denominator) {}

NumericalError::NumericalError(const std::string& what, double residual)
    : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

EstimationError::EstimationError(std::string stage, const std::string& what)
    : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

}  // namespace buzzload
