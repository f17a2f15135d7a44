#include "whatif/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <unordered_map>

#include "whatif/errors.hpp"

namespace whatif {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
}  // namespace

std::vector<DetAction> determinize(const PenTestTask& task) {
  std::vector<DetAction> out;
  for (std::size_t a = 0; a < task.actions.size(); ++a) {
    const auto& action = task.actions[a];
    for (std::size_t o = 0; o < action.outcomes.size(); ++o) {
      const auto& outcome = action.outcomes[o];
      if (!(outcome.probability > 0.0) || outcome.probability > 1.0)
        throw ValidationError("action '" + action.id + "' has an outcome probability outside (0,1]");
      DetAction d;
      d.source_action = a;
      d.outcome_index = o;
      d.id = action.id + "/" + (outcome.name.empty() ? "o" + std::to_string(o) : outcome.name);
      d.pre_net = action.pre_net;
      d.pre_att = action.pre_att;
      d.post = outcome.post;
      d.budget_cost = action.cost;
      d.log_cost = outcome.probability == 1.0 ? 0.0 : -std::log(outcome.probability);
      out.push_back(std::move(d));
    }
  }
  return out;
}

AttackPlan make_plan(std::span<const DetAction> actions, std::vector<std::size_t> steps) {
  AttackPlan plan;
  for (auto s : steps) {
    plan.log_cost += actions[s].log_cost;
    plan.budget_spent += actions[s].budget_cost;
  }
  plan.success_probability = std::exp(-plan.log_cost);
  plan.steps = std::move(steps);
  return plan;
}

PenTestTask with_attacker_budget(PenTestTask task, Cost budget) {
  task.attacker_budget = budget;
  return task;
}

struct AttackPlanner::Active {
  std::vector<std::uint32_t> actions;                 // det-action indices enabled by the network
  std::vector<std::vector<std::uint32_t>> consumers;  // attacker prop -> positions in `actions`
  std::vector<unsigned> pre_count;                    // positive attacker preconditions per position
};

AttackPlanner::AttackPlanner(const PenTestTask& task, PlannerOptions options)
    : task_(&task), options_(options), actions_(determinize(task)) {
  if (!options_.prune_zero_progress) {
    kept_.resize(actions_.size());
    for (std::size_t i = 0; i < kept_.size(); ++i) kept_[i] = i;
  } else {
    // Backward relevance: propositions whose presence (or absence) the goal
    // or a relevant action's precondition asks for.
    const auto natt = task.attacker_universe();
    std::vector<char> want_true(natt, 0), want_false(natt, 0), relevant(actions_.size(), 0);
    for (const auto& lit : task.goal) (lit.negated ? want_false : want_true)[lit.prop] = 1;
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < actions_.size(); ++i) {
        if (relevant[i]) continue;
        const auto& d = actions_[i];
        const bool useful = std::any_of(d.post.begin(), d.post.end(), [&](const Literal& l) {
          return l.negated ? want_false[l.prop] : want_true[l.prop];
        });
        if (!useful) continue;
        relevant[i] = 1;
        changed = true;
        for (const auto& l : d.pre_att) (l.negated ? want_false : want_true)[l.prop] = 1;
      }
    }
    for (std::size_t i = 0; i < actions_.size(); ++i)
      if (relevant[i]) kept_.push_back(i);
  }
}

AttackPlanner::Active AttackPlanner::activate(const NetworkState& net) const {
  Active act;
  act.consumers.resize(task_->attacker_universe());
  for (auto i : kept_) {
    const auto& d = actions_[i];
    if (!holds(d.pre_net, net.bits())) continue;
    const auto pos = static_cast<std::uint32_t>(act.actions.size());
    act.actions.push_back(static_cast<std::uint32_t>(i));
    unsigned n = 0;
    for (const auto& l : d.pre_att) {
      if (l.negated) continue;
      act.consumers[l.prop].push_back(pos);
      ++n;
    }
    act.pre_count.push_back(n);
  }
  return act;
}

double AttackPlanner::relaxed_cost(const Active& active, const Bitset& props, Objective objective) {
  const auto natt = task_->attacker_universe();
  prop_cost_.assign(natt, kInf);
  unsatisfied_ = active.pre_count;

  std::size_t goals_left = 0;
  for (const auto& l : task_->goal)
    if (!l.negated) ++goals_left;
  if (goals_left == 0) return 0.0;

  using Entry = std::pair<double, PropId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto cost_of = [&](std::uint32_t det) {
    const auto& d = actions_[det];
    return objective == Objective::LogCost ? d.log_cost : d.budget_cost.to_double();
  };
  auto fire = [&](std::uint32_t pos, double base) {
    const auto det = active.actions[pos];
    const double c = base + cost_of(det);
    for (const auto& l : actions_[det].post) {
      if (l.negated || c >= prop_cost_[l.prop]) continue;
      prop_cost_[l.prop] = c;
      heap.emplace(c, l.prop);
    }
  };
  props.for_each([&](std::size_t p) {
    prop_cost_[p] = 0.0;
    heap.emplace(0.0, static_cast<PropId>(p));
  });
  for (std::uint32_t pos = 0; pos < active.actions.size(); ++pos)
    if (active.pre_count[pos] == 0) fire(pos, 0.0);

  std::vector<char> goal_seen(natt, 0);
  for (const auto& l : task_->goal)
    if (!l.negated) goal_seen[l.prop] = 1;
  double worst = 0.0;
  while (!heap.empty()) {
    auto [c, p] = heap.top();
    heap.pop();
    if (c > prop_cost_[p]) continue;
    if (goal_seen[p] == 1) {
      goal_seen[p] = 2;
      worst = std::max(worst, c);
      if (--goals_left == 0) return worst;
    }
    for (auto pos : active.consumers[p])
      if (--unsatisfied_[pos] == 0) fire(pos, c);
  }
  return kInf;
}

double AttackPlanner::heuristic(const NetworkState& net, const Bitset& attacker_props) {
  const auto act = activate(net);
  return relaxed_cost(act, attacker_props, Objective::LogCost);
}

namespace {

struct Node {
  Bitset props;
  double g = 0.0;
  double h = 0.0;
  double f = 0.0;
  Cost spent = Cost::zero();
  std::uint32_t parent = kNone;
  std::uint32_t action = kNone;
  std::uint32_t depth = 0;
  bool stale = false;
};

class NodeStore {
 public:
  std::vector<Node> nodes;

  std::vector<std::uint32_t> path(std::uint32_t n) const {
    std::vector<std::uint32_t> out;
    for (; nodes[n].parent != kNone; n = nodes[n].parent) out.push_back(nodes[n].action);
    std::reverse(out.begin(), out.end());
    return out;
  }

  bool lex_less(std::uint32_t a, std::uint32_t b) const { return path(a) < path(b); }

  // Tie-break order between nodes on the same proposition set.
  bool order_le(std::uint32_t a, std::uint32_t b) const {
    const auto& x = nodes[a];
    const auto& y = nodes[b];
    if (x.g != y.g) return x.g < y.g;
    if (x.spent != y.spent) return x.spent < y.spent;
    if (x.depth != y.depth) return x.depth < y.depth;
    return !lex_less(b, a);
  }

  bool dominates(std::uint32_t a, std::uint32_t b, bool finite_budget) const {
    const auto& x = nodes[a];
    const auto& y = nodes[b];
    if (!finite_budget) return order_le(a, b);
    return x.g <= y.g && x.spent <= y.spent && order_le(a, b);
  }

  // Expansion order: f, then h (dive), then budget, depth, sequence.
  bool pops_before(std::uint32_t a, std::uint32_t b) const {
    const auto& x = nodes[a];
    const auto& y = nodes[b];
    if (x.f != y.f) return x.f < y.f;
    if (x.h != y.h) return x.h < y.h;
    if (x.spent != y.spent) return x.spent < y.spent;
    if (x.depth != y.depth) return x.depth < y.depth;
    return lex_less(a, b);
  }
};

}  // namespace

std::optional<AttackPlan> AttackPlanner::search(const NetworkState& net, Objective objective, Cost budget) {
  ++stats_.searches;
  if (guard_) guard_->check_time();

  const auto& task = *task_;
  if (goal_satisfied(task.initial_attacker, task.goal)) return make_plan(actions_, {});

  const Active active = activate(net);
  const bool finite_budget = !budget.is_infinite();
  const bool prune_by_budget = finite_budget && options_.use_heuristic;

  NodeStore store;
  std::unordered_map<Bitset, std::vector<std::uint32_t>, BitsetHash> labels;
  auto cmp = [&store](std::uint32_t a, std::uint32_t b) { return store.pops_before(b, a); };
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, decltype(cmp)> open(cmp);

  auto estimate = [&](const Bitset& props, Cost spent, double& h) {
    h = 0.0;
    if (!options_.use_heuristic) return true;
    h = relaxed_cost(active, props, objective);
    if (h == kInf) return false;
    if (prune_by_budget) {
      const double need = objective == Objective::BudgetCost ? h : relaxed_cost(active, props, Objective::BudgetCost);
      if (need == kInf) return false;
      if (spent.to_double() + need > budget.to_double() + 1e-9) return false;
    }
    return true;
  };

  {
    Node root;
    root.props = task.initial_attacker;
    if (!estimate(root.props, Cost::zero(), root.h)) return std::nullopt;
    root.f = root.h;
    store.nodes.push_back(std::move(root));
    labels[store.nodes[0].props].push_back(0);
    open.push(0);
  }

  const std::size_t node_bytes = sizeof(Node) + store.nodes[0].props.memory_bytes();
  std::size_t expansions = 0;

  while (!open.empty()) {
    const auto id = open.top();
    open.pop();
    if (store.nodes[id].stale) continue;
    if (goal_satisfied(store.nodes[id].props, task.goal)) {
      std::vector<std::size_t> steps;
      for (auto a : store.path(id)) steps.push_back(a);
      stats_.peak_node_bytes = std::max(stats_.peak_node_bytes, store.nodes.size() * node_bytes);
      return make_plan(actions_, std::move(steps));
    }
    ++stats_.expansions;
    if (guard_ && (++expansions & 127) == 0) guard_->check(store.nodes.size() * node_bytes);

    for (auto det : active.actions) {
      const auto& d = actions_[det];
      const Node& parent = store.nodes[id];
      if (!holds(d.pre_att, parent.props)) continue;
      if (d.budget_cost > budget - parent.spent) continue;
      Bitset props = parent.props;
      apply_effect(d.post, props);
      if (props == parent.props) continue;

      Node child;
      child.spent = parent.spent + d.budget_cost;
      child.g = parent.g + (objective == Objective::LogCost ? d.log_cost : d.budget_cost.to_double());
      child.parent = id;
      child.action = det;
      child.depth = parent.depth + 1;
      if (!estimate(props, child.spent, child.h)) continue;
      child.f = child.g + child.h;
      child.props = std::move(props);

      const auto cid = static_cast<std::uint32_t>(store.nodes.size());
      store.nodes.push_back(std::move(child));
      auto& bucket = labels[store.nodes[cid].props];
      bool dominated = false;
      for (auto e : bucket)
        if (store.dominates(e, cid, finite_budget)) {
          dominated = true;
          break;
        }
      if (dominated) {
        store.nodes.pop_back();
        continue;
      }
      std::erase_if(bucket, [&](std::uint32_t e) {
        if (!store.dominates(cid, e, finite_budget)) return false;
        store.nodes[e].stale = true;
        return true;
      });
      bucket.push_back(cid);
      ++stats_.generated;
      open.push(cid);
    }
  }
  stats_.peak_node_bytes = std::max(stats_.peak_node_bytes, store.nodes.size() * node_bytes);
  return std::nullopt;
}

std::optional<AttackPlan> AttackPlanner::critical_attack_path(const NetworkState& net) {
  return search(net, Objective::LogCost, task_->attacker_budget);
}

double AttackPlanner::p_star(const NetworkState& net) {
  auto plan = critical_attack_path(net);
  return plan ? plan->success_probability : 0.0;
}

bool AttackPlanner::plan_still_valid(const NetworkState& net, const AttackPlan& plan) const {
  Bitset props = task_->initial_attacker;
  Cost remaining = task_->attacker_budget;
  for (auto s : plan.steps) {
    const auto& d = actions_[s];
    if (!holds(d.pre_net, net.bits()) || !holds(d.pre_att, props) || remaining < d.budget_cost) return false;
    remaining -= d.budget_cost;
    apply_effect(d.post, props);
  }
  return goal_satisfied(props, task_->goal);
}

Cost AttackPlanner::min_attack_budget(const NetworkState& net) {
  auto plan = search(net, Objective::BudgetCost, Cost::infinite());
  return plan ? plan->budget_spent : Cost::infinite();
}

}  // namespace whatif
