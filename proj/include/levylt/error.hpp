#pragma once

#include <stdexcept>
#include <string>

namespace levylt {

/// Argument outside the mathematical domain of an operation (negative λ, x past the horizon, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs that are individually valid but do not belong together (mismatched grids or models).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Model or approximation parameters that cannot be used (θ_n ≥ 1, invalid triplet, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested scheme or sampler is not available for this jump family.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver stopped without meeting its tolerance or produced a result outside its a-priori bounds.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Event-driven simulation exceeded its event cap.
class RunawayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace levylt
