#include "whatif/frontier.hpp"

#include <algorithm>

namespace whatif {

namespace {
bool p_less(double a, double b) { return a < b - kProbabilityTolerance; }
bool p_le(double a, double b) { return a <= b + kProbabilityTolerance; }
}  // namespace

bool dominates(Cost c1, double p1, Cost c2, double p2) {
  return (p_less(p1, p2) && c1 <= c2) || (p_le(p1, p2) && c1 < c2);
}

bool dominates(const FrontierEntry& a, const FrontierEntry& b) {
  return dominates(a.cost(), a.p_star, b.cost(), b.p_star);
}

bool same_point(const FrontierEntry& a, const FrontierEntry& b) {
  return a.cost() == b.cost() && p_le(a.p_star, b.p_star) && p_le(b.p_star, a.p_star);
}

bool frontier_insert(std::vector<FrontierEntry>& frontier, FrontierEntry candidate) {
  for (const auto& e : frontier)
    if (dominates(e, candidate) || same_point(e, candidate)) return false;
  std::erase_if(frontier, [&](const FrontierEntry& e) { return dominates(candidate, e); });
  auto pos = std::upper_bound(frontier.begin(), frontier.end(), candidate,
                              [](const FrontierEntry& a, const FrontierEntry& b) { return a.cost() < b.cost(); });
  frontier.insert(pos, std::move(candidate));
  return true;
}

}  // namespace whatif
