#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace whatif {

/// Malformed or inconsistent input (model files, task construction, CLI values).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a fix in a strategy is not applicable at its position.
class StrategyError : public ContractViolation {
 public:
  StrategyError(std::size_t index, const std::string& what)
      : ContractViolation(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// Cooperative time or memory limit hit inside a search.
class ResourceLimitExceeded : public std::runtime_error {
 public:
  enum class Kind { Time, Memory };
  ResourceLimitExceeded(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace whatif
