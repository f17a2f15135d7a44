#pragma once

// Brute-force reference computations. They work directly on the transition
// semantics of the model and share no code with the planner or the
// mitigation search.

#include <optional>
#include <vector>

#include "whatif/model.hpp"

namespace whatif::testing {

/// Maximal goal probability over all outcome sequences, by value iteration
/// over the explicitly enumerated attacker state space.
double exhaustive_p_star(const PenTestTask& task, const NetworkState& net);

/// Minimal summed action cost to the goal, ignoring probabilities and the
/// attacker budget; nullopt when unreachable.
std::optional<Cost> exhaustive_min_attack_budget(const PenTestTask& task, const NetworkState& net);

struct Point {
  Cost cost;
  double p = 0.0;
};

/// Every (cost, p*) reached by an applicable fix sequence within the
/// mitigation budget. Sequences revisiting a network state are skipped:
/// their shortcut reaches the same state more cheaply.
std::vector<Point> enumerate_strategy_points(const MitigationTask& task, std::size_t max_sequences = 2'000'000);

/// Pairwise filter: keeps points no other point dominates, one per point.
std::vector<Point> non_dominated(std::vector<Point> points, double tol = 1e-9);

std::vector<Point> brute_force_frontier(const MitigationTask& task);

/// Cheapest strategy lowering p* below its initial value; nullopt if none.
std::optional<Cost> brute_force_min_mitigation_budget(const MitigationTask& task);

bool same_points(const std::vector<Point>& a, const std::vector<Point>& b, double tol = 1e-9);

}  // namespace whatif::testing
