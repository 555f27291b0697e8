#pragma once

#include <stdexcept>
#include <string>

namespace clab {

/// Raised when a computation would exceed one of the desk-scale guards.
/// `guard()` names the cap that fired, e.g. "f_stab: qubits <= 4".
class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(std::string guard)
      : std::runtime_error("budget exceeded: " + guard), guard_(std::move(guard)) {}

  const std::string& guard() const noexcept { return guard_; }

 private:
  std::string guard_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A condition that a proven theorem says cannot happen.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require_budget(bool ok, const char* guard) {
  if (!ok) throw BudgetExceeded(guard);
}

}  // namespace clab
