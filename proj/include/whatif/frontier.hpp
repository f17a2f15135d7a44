#pragma once

#include <vector>

#include "whatif/cost.hpp"
#include "whatif/model.hpp"

namespace whatif {

/// Probabilities closer than this are treated as equal when comparing
/// strategies; absorbs rounding between planner runs on different states.
inline constexpr double kProbabilityTolerance = 1e-12;

struct FrontierEntry {
  MitigationStrategy strategy;
  double p_star = 1.0;

  Cost cost() const { return strategy.cost; }
};

/// (c1, p1) dominates (c2, p2): strictly lower probability at no higher cost,
/// or strictly lower cost at no higher probability.
bool dominates(Cost c1, double p1, Cost c2, double p2);
bool dominates(const FrontierEntry& a, const FrontierEntry& b);

/// Same cost and probabilities equal within tolerance.
bool same_point(const FrontierEntry& a, const FrontierEntry& b);

/// Inserts the candidate unless a member dominates it or already represents
/// its point; removes members it dominates. Keeps entries sorted by cost.
/// Returns whether the candidate was added.
bool frontier_insert(std::vector<FrontierEntry>& frontier, FrontierEntry candidate);

}  // namespace whatif
