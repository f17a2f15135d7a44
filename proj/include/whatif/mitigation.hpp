#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "whatif/errors.hpp"
#include "whatif/frontier.hpp"
#include "whatif/model.hpp"
#include "whatif/planner.hpp"

namespace whatif {

struct SearchOptions {
  /// Growth factor of the iterative-deepening mitigation budget.
  double gamma = 2.0;

  bool use_sss = true;
  bool use_sleep_sets = true;
  bool use_ofix = true;
  /// Reuse of the parent's attack plan and of cached plans per state.
  bool use_oatt = true;
  bool use_c0 = true;

  std::optional<double> time_limit_seconds;
  std::optional<std::size_t> memory_limit_bytes;

  PlannerOptions planner;

  /// Copy the exact attack cache into the result (for audits).
  bool export_attack_cache = false;
};

struct SearchStats {
  std::size_t nodes_expanded = 0;
  std::size_t planner_calls = 0;
  std::size_t parent_plan_reuses = 0;
  std::size_t cache_hits = 0;
  std::size_t c0_prunes = 0;
  std::size_t sleep_skips = 0;
  std::size_t ofix_prunes = 0;
  std::size_t cycle_prunes = 0;
  std::size_t budget_cutoffs = 0;
  std::size_t ids_iterations = 0;
  std::size_t planner_expansions = 0;
  std::size_t peak_memory_bytes = 0;
  double wall_seconds = 0.0;
};

struct CachedAttack {
  NetworkState state;
  double p_star = 0.0;
};

struct MitigationResult {
  std::vector<FrontierEntry> frontier;  ///< sorted by cost
  bool complete = false;
  std::optional<ResourceLimitExceeded::Kind> limit;
  double initial_p_star = 0.0;
  Cost c_zero = Cost::infinite();
  Cost final_budget = Cost::zero();
  SearchStats stats;
  std::vector<CachedAttack> attack_cache;
};

/// Pareto frontier of mitigation strategies by depth-first search under an
/// iteratively deepened mitigation budget. A time or memory limit ends the
/// search early with `complete == false` and whatever frontier was built.
MitigationResult pareto_frontier(const MitigationTask& task, const SearchOptions& options = {});

/// Cheapest strategy cost that lowers p* below its initial value, ignoring
/// the task's mitigation budget; infinite if none exists or p* is already 0.
/// Runs under the attacker budget stored in the task. Throws
/// ResourceLimitExceeded when the options' limits are hit.
Cost min_mitigation_budget(const MitigationTask& task, const SearchOptions& options = {});

}  // namespace whatif
