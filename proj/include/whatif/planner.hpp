#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "whatif/limits.hpp"
#include "whatif/model.hpp"

namespace whatif {

/// One outcome of one attacker action, made deterministic. The search
/// minimises the summed log_cost, i.e. maximises the product of outcome
/// probabilities, and treats budget_cost as a resource.
struct DetAction {
  std::size_t source_action = 0;
  std::size_t outcome_index = 0;
  std::string id;
  Condition pre_net;
  Condition pre_att;
  Condition post;
  Cost budget_cost;
  double log_cost = 0.0;  ///< -ln p(o)
};

/// All-outcome determinization: one DetAction per (action, outcome), in
/// action order then outcome order.
std::vector<DetAction> determinize(const PenTestTask& task);

struct AttackPlan {
  std::vector<std::size_t> steps;  ///< indices into determinize(task)
  double log_cost = 0.0;
  double success_probability = 1.0;
  Cost budget_spent = Cost::zero();
};

/// Builds the plan record for a step sequence, summing log costs in order.
AttackPlan make_plan(std::span<const DetAction> actions, std::vector<std::size_t> steps);

struct PlannerOptions {
  /// Guide the search with the delete-relaxation max heuristic; otherwise
  /// plain uniform-cost search.
  bool use_heuristic = true;
  /// Drop deterministic actions that cannot contribute to the goal
  /// (empty postconditions, irrelevant additions).
  bool prune_zero_progress = true;
};

struct PlannerStats {
  std::size_t searches = 0;
  std::size_t expansions = 0;
  std::size_t generated = 0;
  std::size_t peak_node_bytes = 0;
};

/// Optimal critical-attack-path search for a fixed network state.
///
/// Nodes are (attacker propositions, spent budget, accumulated -ln p). A
/// node is pruned when another node over the same propositions is at least
/// as probable and has spent no more budget. With an unlimited budget this
/// collapses to keeping the best node per proposition set.
///
/// Ties between plans of equal probability are broken towards lower budget,
/// then fewer steps, then the lexicographically smaller step sequence among
/// nodes that reach the same proposition set; the final choice between
/// distinct optimal goal nodes follows the deterministic expansion order.
///
/// Instances are single-threaded and independent of each other.
class AttackPlanner {
 public:
  explicit AttackPlanner(const PenTestTask& task, PlannerOptions options = {});

  std::optional<AttackPlan> critical_attack_path(const NetworkState& net);

  /// Success probability of a critical attack path, 0 when none exists.
  double p_star(const NetworkState& net);

  /// Replays the plan from the initial attacker state under `net`.
  bool plan_still_valid(const NetworkState& net, const AttackPlan& plan) const;

  /// Minimal summed action cost of any goal-reaching sequence, ignoring
  /// probabilities and the attacker budget; infinite when unreachable.
  Cost min_attack_budget(const NetworkState& net);

  /// h_max over -ln p from `attacker_props`, ignoring deletes and negative
  /// preconditions. Infinity when the goal is relaxed-unreachable.
  double heuristic(const NetworkState& net, const Bitset& attacker_props);

  const std::vector<DetAction>& det_actions() const { return actions_; }
  /// Deterministic actions kept after relevance pruning.
  const std::vector<std::size_t>& search_actions() const { return kept_; }
  const PenTestTask& task() const { return *task_; }
  const PlannerStats& stats() const { return stats_; }

  void set_guard(const ResourceGuard* guard) { guard_ = guard; }

 private:
  enum class Objective { LogCost, BudgetCost };
  struct Active;

  std::optional<AttackPlan> search(const NetworkState& net, Objective objective, Cost budget);
  Active activate(const NetworkState& net) const;
  double relaxed_cost(const Active& active, const Bitset& props, Objective objective);

  const PenTestTask* task_;
  PlannerOptions options_;
  std::vector<DetAction> actions_;
  std::vector<std::size_t> kept_;
  PlannerStats stats_;
  const ResourceGuard* guard_ = nullptr;

  // h_max scratch
  std::vector<double> prop_cost_;
  std::vector<unsigned> unsatisfied_;
};

PenTestTask with_attacker_budget(PenTestTask task, Cost budget);

}  // namespace whatif
