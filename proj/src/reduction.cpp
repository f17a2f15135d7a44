#include "whatif/reduction.hpp"

#include <algorithm>
#include <set>

#include "whatif/errors.hpp"

namespace whatif {

namespace {

bool contains(const Condition& c, Literal lit) { return std::find(c.begin(), c.end(), lit) != c.end(); }

bool post_hits(const FixAction& a, const Condition& target, bool complemented) {
  for (const auto& l : a.post)
    if (contains(target, complemented ? l.complement() : l)) return true;
  return false;
}

bool disables_pair(const FixAction& a, const FixAction& b) { return post_hits(a, b.pre, true); }
bool conflicts_pair(const FixAction& a, const FixAction& b) { return post_hits(a, b.post, true); }
bool enables_pair(const FixAction& a, const FixAction& b) { return post_hits(a, b.pre, false); }

const std::vector<std::size_t> kNoAchievers;

}  // namespace

ActionRelations::ActionRelations(std::span<const FixAction> fixes)
    : n_(fixes.size()),
      disables_(n_ * n_, 0),
      conflicts_(n_ * n_, 0),
      enables_(n_ * n_, 0),
      inf_(n_) {
  std::size_t universe = 0;
  for (const auto& f : fixes)
    for (const auto& l : f.post) universe = std::max<std::size_t>(universe, l.prop + 1);
  achievers_.resize(2 * universe);
  for (std::size_t i = 0; i < n_; ++i)
    for (const auto& l : fixes[i].post) {
      auto& v = achievers_[2 * l.prop + (l.negated ? 1 : 0)];
      if (v.empty() || v.back() != i) v.push_back(i);
    }
}

void ActionRelations::fill_row(std::span<const FixAction> fixes, std::size_t i) {
  const auto& a = fixes[i];
  for (std::size_t j = 0; j < n_; ++j) {
    const auto& b = fixes[j];
    const bool dis = disables_pair(a, b);
    const bool con = conflicts_pair(a, b) || conflicts_pair(b, a);
    disables_[i * n_ + j] = dis;
    conflicts_[i * n_ + j] = con;
    enables_[i * n_ + j] = enables_pair(a, b);
    if (con || dis || disables_pair(b, a)) inf_[i].push_back(j);
  }
}

const std::vector<std::size_t>& ActionRelations::achievers(Literal lit) const {
  const std::size_t k = 2 * lit.prop + (lit.negated ? 1 : 0);
  return k < achievers_.size() ? achievers_[k] : kNoAchievers;
}

ActionRelations compute_relations(std::span<const FixAction> fixes) {
  ActionRelations r(fixes);
  const auto n = static_cast<long>(fixes.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) r.fill_row(fixes, static_cast<std::size_t>(i));
  return r;
}

ActionRelations compute_relations_serial(std::span<const FixAction> fixes) {
  ActionRelations r(fixes);
  for (std::size_t i = 0; i < fixes.size(); ++i) r.fill_row(fixes, i);
  return r;
}

Condition relevant_props(const AttackPlan& plan, std::span<const DetAction> actions) {
  Condition P;
  for (auto s : plan.steps)
    for (const auto& l : actions[s].pre_net) P.push_back(l.complement());
  std::sort(P.begin(), P.end());
  P.erase(std::unique(P.begin(), P.end()), P.end());
  return P;
}

std::vector<std::size_t> landmark(const Condition& P, std::span<const FixAction> fixes) {
  Condition sorted = P;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fixes.size(); ++i)
    for (const auto& l : fixes[i].post)
      if (std::binary_search(sorted.begin(), sorted.end(), l)) {
        out.push_back(i);
        break;
      }
  return out;
}

std::vector<std::size_t> necessary_enabling_set(std::size_t fix, const NetworkState& net,
                                                std::span<const FixAction> fixes,
                                                const ActionRelations& relations) {
  const Literal* chosen = nullptr;
  for (const auto& l : fixes[fix].pre)
    if (net.contains(l.prop) == l.negated && (!chosen || l.prop < chosen->prop)) chosen = &l;
  if (!chosen) throw ContractViolation("fix '" + fixes[fix].id + "' is applicable; no enabling set needed");
  return relations.achievers(*chosen);
}

StubbornSet compute_stubborn_set(const NetworkState& net, const Condition& P, const ActionRelations& relations,
                                 std::span<const FixAction> fixes) {
  StubbornSet result;
  auto seed = landmark(P, fixes);
  if (seed.empty()) {
    result.unmitigable = true;
    return result;
  }
  std::vector<char> in(fixes.size(), 0);
  std::vector<std::size_t> work;
  auto add = [&](std::size_t f) {
    if (in[f]) return;
    in[f] = 1;
    work.push_back(f);
  };
  for (auto f : seed) add(f);
  while (!work.empty()) {
    const auto f = work.back();
    work.pop_back();
    if (fix_applicable(net, fixes[f])) {
      for (auto g : relations.inf(f)) add(g);
    } else {
      for (auto g : necessary_enabling_set(f, net, fixes, relations)) add(g);
    }
  }
  for (std::size_t f = 0; f < fixes.size(); ++f) {
    if (!in[f]) continue;
    result.actions.push_back(f);
    if (fix_applicable(net, fixes[f])) result.restricted_app.push_back(f);
  }
  return result;
}

std::optional<std::string> audit_stubborn_set(const NetworkState& net, const Condition& P,
                                              const ActionRelations& relations, std::span<const FixAction> fixes,
                                              std::span<const std::size_t> set) {
  const std::set<std::size_t> T(set.begin(), set.end());
  auto inside = [&](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [&](std::size_t f) { return T.count(f) > 0; });
  };
  const auto L = landmark(P, fixes);
  if (L.empty()) return "landmark is empty";
  if (!inside(L)) return "landmark not contained";
  for (auto f : T) {
    if (fix_applicable(net, fixes[f])) {
      if (!inside(relations.inf(f))) return "interference of applicable fix '" + fixes[f].id + "' not contained";
      continue;
    }
    bool covered = false;
    for (const auto& l : fixes[f].pre)
      if (net.contains(l.prop) == l.negated && inside(relations.achievers(l))) {
        covered = true;
        break;
      }
    if (!covered) return "no necessary enabling set of fix '" + fixes[f].id + "' contained";
  }
  return std::nullopt;
}

}  // namespace whatif
