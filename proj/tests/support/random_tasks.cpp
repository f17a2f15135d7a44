#include "random_tasks.hpp"

#include <algorithm>
#include <cmath>

namespace whatif::testing {

namespace {

Literal pos(PropId p) { return {p, false}; }
Literal neg(PropId p) { return {p, true}; }

void add_unique(Condition& c, Literal l) {
  for (const auto& x : c)
    if (x.prop == l.prop) return;
  c.push_back(l);
}

std::vector<Outcome> random_outcomes(Rand& r, Condition success, unsigned attacker_props) {
  if (r.coin(0.25)) return {Outcome{1.0, std::move(success), "only"}};
  static constexpr double kLevels[] = {0.2, 0.5, 0.8};
  double p = r.coin(0.6) ? kLevels[r.between(0, 2)] : 0.05 * r.between(1, 19);
  std::vector<Outcome> out{Outcome{p, std::move(success), "success"}};
  if (r.coin(0.3) && p < 0.9) {
    const double q = std::round(((1.0 - p) * r.uniform()) * 100.0) / 100.0;
    if (q > 0.0 && q < 1.0 - p) {
      Condition alt{pos(static_cast<PropId>(r.between(1, attacker_props - 1)))};
      out.push_back(Outcome{q, std::move(alt), "partial"});
      p += q;
    }
  }
  out.push_back(Outcome{1.0 - p, {}, "fail"});
  return out;
}

}  // namespace

MitigationTask random_task(std::uint64_t seed, const RandomTaskSpec& spec) {
  Rand r(seed);
  auto vocab = std::make_shared<Vocabulary>();
  const unsigned n_net = r.between(4, spec.max_network_props);
  const unsigned n_att = r.between(3, spec.max_attacker_props);
  for (unsigned i = 0; i < n_net; ++i) vocab->network.intern("n", {std::to_string(i)});
  for (unsigned i = 0; i < n_att; ++i) vocab->attacker.intern("a", {std::to_string(i)});

  MitigationTask task;
  task.initial_network = NetworkState(n_net);
  std::vector<PropId> on, off;
  for (PropId i = 0; i < n_net; ++i) {
    if (r.coin(0.75)) {
      task.initial_network.insert(i);
      on.push_back(i);
    } else {
      off.push_back(i);
    }
  }
  if (on.empty()) {
    task.initial_network.insert(0);
    on.push_back(0);
    off.erase(std::remove(off.begin(), off.end(), PropId{0}), off.end());
  }

  auto& pt = task.pentest;
  pt.initial_attacker = Bitset(n_att);
  pt.initial_attacker.set(0);
  if (r.coin(0.2)) pt.initial_attacker.set(1);
  const PropId goal = n_att - 1;
  pt.goal = {pos(goal)};
  if (n_att > 3 && r.coin(0.25)) pt.goal.push_back(pos(goal - 1));

  auto net_literal = [&]() {
    if (!off.empty() && r.coin(0.15)) return neg(off[r.between(0, static_cast<unsigned>(off.size()) - 1)]);
    if (r.coin(0.1)) return pos(static_cast<PropId>(r.between(0, n_net - 1)));
    return pos(on[r.between(0, static_cast<unsigned>(on.size()) - 1)]);
  };
  auto make_action = [&](PropId from, PropId to) {
    AttackerAction a;
    a.id = "x" + std::to_string(pt.actions.size());
    a.pre_att = {pos(from)};
    if (r.coin(0.25)) add_unique(a.pre_att, pos(static_cast<PropId>(r.between(0, from))));
    if (r.coin(0.08) && to != from) add_unique(a.pre_att, neg(to));
    a.pre_net = {net_literal()};
    if (r.coin(0.4)) add_unique(a.pre_net, net_literal());
    Condition success{pos(to)};
    if (r.coin(0.15)) add_unique(success, neg(static_cast<PropId>(r.between(0, n_att - 1))));
    a.cost = Cost::from_double(r.coin(0.8) ? r.between(1, 3) : 0.5 * r.between(1, 5));
    a.outcomes = random_outcomes(r, std::move(success), n_att);
    pt.actions.push_back(std::move(a));
  };

  const unsigned n_actions = r.between(3, spec.max_actions);
  // A chain from a0 towards the goal keeps most tasks reachable.
  PropId at = 0;
  while (pt.actions.size() < n_actions && at < goal) {
    const PropId next = std::min<PropId>(goal, at + r.between(1, 3));
    make_action(at, next);
    at = next;
  }
  while (pt.actions.size() < n_actions) {
    const PropId from = static_cast<PropId>(r.between(0, n_att - 2));
    make_action(from, static_cast<PropId>(r.between(from + 1, n_att - 1)));
  }
  pt.attacker_budget = r.coin(spec.finite_attack_budget) ? Cost::from_double(r.between(1, 6)) : Cost::infinite();

  // Fixes: kills of used network props, gated kills, setup gates, and
  // occasional fixes that add network propositions.
  std::vector<Literal> used;
  for (const auto& a : pt.actions)
    for (const auto& l : a.pre_net) used.push_back(l);
  const unsigned n_fixes = r.between(0, spec.max_fixes);
  std::optional<PropId> gate;
  if (!off.empty() && r.coin(0.5)) gate = off[r.between(0, static_cast<unsigned>(off.size()) - 1)];
  for (unsigned k = 0; k < n_fixes; ++k) {
    FixAction f;
    f.id = "f" + std::to_string(k);
    f.cost = Cost::from_double(r.coin(0.85) ? r.between(1, 5) : 0.5 * r.between(1, 9));
    const double kind = r.uniform();
    const Literal target = used[r.between(0, static_cast<unsigned>(used.size()) - 1)];
    if (gate && kind < 0.2) {
      f.pre = {neg(*gate)};
      f.post = {pos(*gate)};
      if (r.coin(0.5)) add_unique(f.post, target.complement());
    } else if (gate && kind < 0.45) {
      f.pre = {pos(*gate)};
      add_unique(f.pre, target);
      f.post = {target.complement()};
    } else if (kind < 0.85) {
      f.pre = {target};
      f.post = {target.complement()};
      if (r.coin(0.2)) add_unique(f.post, used[r.between(0, static_cast<unsigned>(used.size()) - 1)].complement());
    } else {
      const PropId p = static_cast<PropId>(r.between(0, n_net - 1));
      if (r.coin(0.5)) f.pre = {neg(p)};
      f.post = {pos(p)};
    }
    task.fixes.push_back(std::move(f));
  }
  task.mitigation_budget =
      r.coin(spec.finite_mitigation_budget) ? Cost::from_double(r.between(2, 12)) : Cost::infinite();
  pt.vocab = std::move(vocab);
  validate(task);
  return task;
}

}  // namespace whatif::testing
