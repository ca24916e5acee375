#ifndef LEIBENSON_ERRORS_HPP
#define LEIBENSON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace leibenson {

/// Invalid user-facing configuration (bad parameter, missing field, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (negative radius, window outside a trajectory).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical hypothesis of an operation does not hold for its input.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inner nonlinear solve failed even after time-step halving.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double time, double dt, double residual)
      : std::runtime_error(what), time_(time), dt_(dt), residual_(residual) {}

  double time() const { return time_; }
  double dt() const { return dt_; }
  double residual() const { return residual_; }

 private:
  double time_;
  double dt_;
  double residual_;
};

}  // namespace leibenson

#endif  // LEIBENSON_ERRORS_HPP
