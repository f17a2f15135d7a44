#pragma once

// Syntactic relations between fix-actions and the strong stubborn sets that
// restrict fix-level branching to moves that can break the current attack.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "whatif/model.hpp"
#include "whatif/planner.hpp"

namespace whatif {

class ActionRelations {
 public:
  ActionRelations() = default;

  std::size_t size() const { return n_; }

  /// Some post literal of i is complemented in pre(j).
  bool disables(std::size_t i, std::size_t j) const { return disables_[i * n_ + j]; }
  /// Complementary post literals (symmetric).
  bool conflicts(std::size_t i, std::size_t j) const { return conflicts_[i * n_ + j]; }
  /// Some post literal of i occurs in pre(j).
  bool enables(std::size_t i, std::size_t j) const { return enables_[i * n_ + j]; }
  bool interferes(std::size_t i, std::size_t j) const {
    return conflicts(i, j) || disables(i, j) || disables(j, i);
  }
  bool commutative(std::size_t i, std::size_t j) const {
    return !interferes(i, j) && !enables(i, j) && !enables(j, i);
  }

  /// Fixes interfering with i, ascending.
  const std::vector<std::size_t>& inf(std::size_t i) const { return inf_[i]; }
  /// Fixes whose postcondition contains the literal, ascending.
  const std::vector<std::size_t>& achievers(Literal lit) const;

  friend bool operator==(const ActionRelations&, const ActionRelations&) = default;

 private:
  friend ActionRelations compute_relations(std::span<const FixAction>);
  friend ActionRelations compute_relations_serial(std::span<const FixAction>);

  void fill_row(std::span<const FixAction> fixes, std::size_t i);

  explicit ActionRelations(std::span<const FixAction> fixes);

  std::size_t n_ = 0;
  std::vector<char> disables_, conflicts_, enables_;
  std::vector<std::vector<std::size_t>> inf_;
  std::vector<std::vector<std::size_t>> achievers_;  // index 2*prop + negated
};

/// Pairwise relation analysis, rows computed in parallel.
ActionRelations compute_relations(std::span<const FixAction> fixes);
/// Single-threaded reference of compute_relations.
ActionRelations compute_relations_serial(std::span<const FixAction> fixes);

/// Complements of the network preconditions of the plan's steps, sorted and
/// without duplicates.
Condition relevant_props(const AttackPlan& plan, std::span<const DetAction> actions);

/// Fixes with an element of P in their postcondition, ascending. Empty means
/// no fix can invalidate the path.
std::vector<std::size_t> landmark(const Condition& P, std::span<const FixAction> fixes);

/// Achievers of the unsatisfied precondition literal of `fix` with the
/// smallest proposition id. Throws ContractViolation if the fix is applicable.
std::vector<std::size_t> necessary_enabling_set(std::size_t fix, const NetworkState& net,
                                                std::span<const FixAction> fixes,
                                                const ActionRelations& relations);

struct StubbornSet {
  std::vector<std::size_t> actions;         ///< ascending
  std::vector<std::size_t> restricted_app;  ///< applicable members, ascending
  bool unmitigable = false;                 ///< empty landmark
};

StubbornSet compute_stubborn_set(const NetworkState& net, const Condition& P, const ActionRelations& relations,
                                 std::span<const FixAction> fixes);

/// Checks the three stubborn-set conditions for `set`; returns a description
/// of the first violation.
std::optional<std::string> audit_stubborn_set(const NetworkState& net, const Condition& P,
                                              const ActionRelations& relations, std::span<const FixAction> fixes,
                                              std::span<const std::size_t> set);

}  // namespace whatif
