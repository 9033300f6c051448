#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gapbump {

/// Base class for numerical failures surfaced by the library. The CLI maps
/// these to exit status 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 0 is (numerically) an eigenvalue of -Δ+V, so it does not lie in a gap.
class NotInvertible : public NumericError {
 public:
  using NumericError::NumericError;
};

class NoConvergence : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Newton iterate fell into the trivial critical point u = 0.
class TrivialCollapse : public NumericError {
 public:
  using NumericError::NumericError;
};

class AllKernel : public NumericError {
 public:
  using NumericError::NumericError;
};

class OutOfBall : public NumericError {
 public:
  using NumericError::NumericError;
};

class CentersCollide : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SeparationTooSmall : public NumericError {
 public:
  using NumericError::NumericError;
};

class GluingUnstable : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Bad configuration input; `line` is 0 when it cannot be located.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& what)
      : std::runtime_error(describe(field, line, what)), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  static std::string describe(const std::string& field, int line, const std::string& what) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": field '" + field + "'";
    return out + ": " + what;
  }

  std::string field_;
  int line_ = 0;
};

}  // namespace gapbump
