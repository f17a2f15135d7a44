#include "whatif/mitigation.hpp"

#include <algorithm>
#include <memory>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "whatif/limits.hpp"
#include "whatif/reduction.hpp"

namespace whatif {

namespace {

using PlanPtr = std::shared_ptr<const AttackPlan>;

struct FixRecord {
  Cost cost;
  std::vector<std::size_t> sequence;
};

struct AttackRecord {
  PlanPtr plan;
  double p_star = 0.0;
  bool exact = false;
};

struct Frame {
  NetworkState net;
  std::vector<std::size_t> sequence;
  Cost cost;
  std::vector<std::size_t> sleep;  // ascending
  PlanPtr plan;
  double p_star = 0.0;
  bool exact = true;
  std::vector<std::size_t> candidates;
  std::size_t next = 0;
};

// A fix whose post literals never appear in an attacker action's network
// precondition can only remove attack options, so a surviving parent plan
// is still optimal after it.
std::vector<char> attack_monotone(const MitigationTask& task) {
  std::unordered_set<std::uint64_t> enabling;
  for (const auto& a : task.pentest.actions)
    for (const auto& l : a.pre_net) enabling.insert(2ull * l.prop + (l.negated ? 1 : 0));
  std::vector<char> out(task.fixes.size(), 1);
  for (std::size_t i = 0; i < task.fixes.size(); ++i)
    for (const auto& l : task.fixes[i].post)
      if (enabling.count(2ull * l.prop + (l.negated ? 1 : 0))) out[i] = 0;
  return out;
}

std::size_t state_bytes(const NetworkState& s) { return s.bits().memory_bytes(); }

class ParetoSearch {
 public:
  ParetoSearch(const MitigationTask& task, const SearchOptions& options)
      : task_(task),
        options_(options),
        planner_(task.pentest, options.planner),
        relations_(options.use_sss ? compute_relations(task.fixes) : ActionRelations{}),
        monotone_(attack_monotone(task)),
        guard_(options.time_limit_seconds, options.memory_limit_bytes) {
    planner_.set_guard(&guard_);
  }

  MitigationResult run() {
    MitigationResult result;
    try {
      Cost max_fix = Cost::zero();
      for (const auto& f : task_.fixes) max_fix = std::max(max_fix, f.cost);
      const Cost b0 = task_.mitigation_budget;
      Cost budget = std::min(max_fix, b0);
      for (;;) {
        ++stats_.ids_iterations;
        cut_off_ = false;
        iterate(budget);
        if (!c_zero_.is_infinite() || !cut_off_ || budget == b0) break;
        Cost grown = budget.scaled(options_.gamma);
        if (grown <= budget) grown = budget + Cost::from_units(1);
        budget = std::min(grown, b0);
      }
      result.final_budget = budget;
      result.complete = true;
    } catch (const ResourceLimitExceeded& e) {
      result.limit = e.kind();
    }
    result.frontier = frontier_;
    result.initial_p_star = initial_p_;
    result.c_zero = c_zero_;
    stats_.planner_expansions = planner_.stats().expansions;
    stats_.peak_memory_bytes = guard_.peak_bytes();
    stats_.wall_seconds = guard_.elapsed_seconds();
    result.stats = stats_;
    if (options_.export_attack_cache)
      for (const auto& [state, rec] : oatt_)
        if (rec.exact) result.attack_cache.push_back({state, rec.p_star});
    return result;
  }

 private:
  void iterate(Cost budget) {
    std::vector<Frame> stack;
    Frame root;
    root.net = task_.initial_network;
    root.cost = Cost::zero();
    if (evaluate(root, nullptr, 0)) stack.push_back(std::move(root));

    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next == top.candidates.size()) {
        stack.pop_back();
        continue;
      }
      const std::size_t idx = top.next++;
      const std::size_t f = top.candidates[idx];
      const Cost cost = top.cost + task_.fixes[f].cost;
      if (options_.use_c0 && cost > c_zero_) {
        ++stats_.c0_prunes;
        continue;
      }
      if (options_.use_sleep_sets && std::binary_search(top.sleep.begin(), top.sleep.end(), f)) {
        ++stats_.sleep_skips;
        continue;
      }
      NetworkState succ = apply_fix(top.net, task_.fixes[f]);
      // A sequence returning to a state on its own path is dominated by its shortcut.
      if (std::any_of(stack.begin(), stack.end(), [&](const Frame& fr) { return fr.net == succ; })) {
        ++stats_.cycle_prunes;
        continue;
      }
      if (options_.use_ofix) {
        auto it = ofix_.find(succ);
        if (it != ofix_.end() && cost > it->second.cost) {
          ++stats_.ofix_prunes;
          continue;
        }
      }
      if (cost > budget) {
        cut_off_ = true;
        ++stats_.budget_cutoffs;
        continue;
      }

      Frame child;
      child.net = std::move(succ);
      child.sequence = top.sequence;
      child.sequence.push_back(f);
      child.cost = cost;
      if (options_.use_sleep_sets) {
        std::vector<std::size_t> merged = top.sleep;
        merged.insert(merged.end(), top.candidates.begin(), top.candidates.begin() + static_cast<long>(idx));
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        for (auto g : merged)
          if (commutative(g, f)) child.sleep.push_back(g);
      }
      if (evaluate(child, &top, f)) stack.push_back(std::move(child));
    }
  }

  bool commutative(std::size_t a, std::size_t b) {
    if (relations_.size() == task_.fixes.size()) return relations_.commutative(a, b);
    if (!lazy_relations_) lazy_relations_ = std::make_unique<ActionRelations>(compute_relations(task_.fixes));
    return lazy_relations_->commutative(a, b);
  }

  const ActionRelations& relations() {
    if (relations_.size() == task_.fixes.size()) return relations_;
    if (!lazy_relations_) lazy_relations_ = std::make_unique<ActionRelations>(compute_relations(task_.fixes));
    return *lazy_relations_;
  }

  // Computes p* for the frame's state, records it, and prepares successors.
  // Returns false when the node has no successors to explore.
  bool evaluate(Frame& fr, const Frame* parent, std::size_t via) {
    ++stats_.nodes_expanded;
    guard_.check();

    const AttackRecord* cached = nullptr;
    if (options_.use_oatt) {
      auto it = oatt_.find(fr.net);
      if (it != oatt_.end() && it->second.exact) cached = &it->second;
    }
    if (options_.use_oatt && parent && parent->plan && parent->exact && monotone_[via] &&
        planner_.plan_still_valid(fr.net, *parent->plan)) {
      ++stats_.parent_plan_reuses;
      fr.plan = parent->plan;
      fr.p_star = parent->p_star;
      fr.exact = true;
    } else if (cached) {
      ++stats_.cache_hits;
      fr.plan = cached->plan;
      fr.p_star = cached->p_star;
      fr.exact = true;
    } else {
      ++stats_.planner_calls;
      auto plan = planner_.critical_attack_path(fr.net);
      if (plan) {
        fr.p_star = plan->success_probability;
        fr.plan = std::make_shared<const AttackPlan>(std::move(*plan));
      } else {
        fr.p_star = 0.0;
      }
      fr.exact = true;
    }
    if (!parent && stats_.ids_iterations == 1) initial_p_ = fr.p_star;

    frontier_insert(frontier_, FrontierEntry{MitigationStrategy{fr.sequence, fr.cost}, fr.p_star});

    const std::size_t entry_bytes =
        2 * state_bytes(fr.net) + fr.sequence.size() * sizeof(std::size_t) + 96 +
        (fr.plan ? fr.plan->steps.size() * sizeof(std::size_t) : 0);
    if (auto it = ofix_.find(fr.net); it == ofix_.end()) {
      ofix_.emplace(fr.net, FixRecord{fr.cost, fr.sequence});
      cache_bytes_ += entry_bytes;
    } else if (fr.cost < it->second.cost) {
      it->second = FixRecord{fr.cost, fr.sequence};
    }
    if (auto it = oatt_.find(fr.net); it == oatt_.end()) {
      oatt_.emplace(fr.net, AttackRecord{fr.plan, fr.p_star, fr.exact});
    } else if (!it->second.exact) {
      it->second = AttackRecord{fr.plan, fr.p_star, fr.exact};
    }
    guard_.set_baseline(cache_bytes_);

    if (fr.p_star <= 0.0) {
      c_zero_ = std::min(c_zero_, fr.cost);
      return false;
    }

    if (options_.use_sss) {
      const auto P = relevant_props(*fr.plan, planner_.det_actions());
      auto sss = compute_stubborn_set(fr.net, P, relations(), task_.fixes);
      fr.candidates = std::move(sss.restricted_app);
    } else {
      fr.candidates = app_set(fr.net, task_.fixes);
    }
    return !fr.candidates.empty();
  }

  const MitigationTask& task_;
  SearchOptions options_;
  AttackPlanner planner_;
  ActionRelations relations_;
  std::unique_ptr<ActionRelations> lazy_relations_;
  std::vector<char> monotone_;
  ResourceGuard guard_;

  std::vector<FrontierEntry> frontier_;
  Cost c_zero_ = Cost::infinite();
  std::unordered_map<NetworkState, FixRecord, NetworkStateHash> ofix_;
  std::unordered_map<NetworkState, AttackRecord, NetworkStateHash> oatt_;
  std::size_t cache_bytes_ = 0;
  bool cut_off_ = false;
  double initial_p_ = 0.0;
  SearchStats stats_;
};

}  // namespace

MitigationResult pareto_frontier(const MitigationTask& task, const SearchOptions& options) {
  validate(task);
  if (!(options.gamma > 1.0)) throw ValidationError("budget growth factor must exceed 1");
  ParetoSearch search(task, options);
  return search.run();
}

Cost min_mitigation_budget(const MitigationTask& task, const SearchOptions& options) {
  validate(task);
  ResourceGuard guard(options.time_limit_seconds, options.memory_limit_bytes);
  AttackPlanner planner(task.pentest, options.planner);
  planner.set_guard(&guard);
  const auto relations = options.use_sss ? compute_relations(task.fixes) : ActionRelations{};

  const double p0 = planner.p_star(task.initial_network);
  if (p0 <= 0.0) return Cost::infinite();

  struct Item {
    Cost cost;
    std::vector<std::size_t> sequence;
    NetworkState state;
  };
  auto later = [](const Item& a, const Item& b) {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.sequence > b.sequence;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(later)> open(later);
  std::unordered_map<NetworkState, Cost, NetworkStateHash> best;
  std::unordered_set<NetworkState, NetworkStateHash> closed;
  open.push({Cost::zero(), {}, task.initial_network});
  best.emplace(task.initial_network, Cost::zero());
  std::size_t bytes = 0;

  while (!open.empty()) {
    Item item = open.top();
    open.pop();
    if (!closed.insert(item.state).second) continue;
    bytes += 2 * state_bytes(item.state) + 64;
    guard.set_baseline(bytes);
    guard.check();

    auto plan = planner.critical_attack_path(item.state);
    const double p = plan ? plan->success_probability : 0.0;
    if (p < p0 - kProbabilityTolerance) return item.cost;

    std::vector<std::size_t> succ;
    if (options.use_sss) {
      succ = compute_stubborn_set(item.state, relevant_props(*plan, planner.det_actions()), relations, task.fixes)
                 .restricted_app;
    } else {
      succ = app_set(item.state, task.fixes);
    }
    for (auto f : succ) {
      NetworkState next = apply_fix(item.state, task.fixes[f]);
      if (closed.count(next)) continue;
      const Cost cost = item.cost + task.fixes[f].cost;
      auto it = best.find(next);
      if (it != best.end() && it->second <= cost) continue;
      best[next] = cost;
      auto seq = item.sequence;
      seq.push_back(f);
      open.push({cost, std::move(seq), std::move(next)});
    }
  }
  return Cost::infinite();
}

}  // namespace whatif
