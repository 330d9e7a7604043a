#pragma once

#include <stdexcept>
#include <string>

namespace gvoco {

// Error taxonomy mirrored by the CLI exit codes: config/input problems (2),
// violated runtime invariants (3), numerical diagnostics such as a solver
// running out of budget (4).

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Requested operation is unsupported for the given object (e.g. exact
// gradient variation on a stream that cannot certify it).
class CapabilityError : public ConfigError {
 public:
  explicit CapabilityError(const std::string& what) : ConfigError(what) {}
};

class InvariantError : public std::runtime_error {
 public:
  InvariantError(const std::string& name, int round, double lhs, double rhs)
      : std::runtime_error("invariant '" + name + "' violated at round " +
                           std::to_string(round) + ": lhs=" + std::to_string(lhs) +
                           " rhs=" + std::to_string(rhs)),
        name_(name), round_(round), lhs_(lhs), rhs_(rhs) {}

  const std::string& name() const { return name_; }
  int round() const { return round_; }
  double lhs() const { return lhs_; }
  double rhs() const { return rhs_; }

 private:
  std::string name_;
  int round_;
  double lhs_, rhs_;
};

class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual=" + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace gvoco
