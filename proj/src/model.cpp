#include "whatif/model.hpp"

#include <cmath>
#include <sstream>

#include "whatif/errors.hpp"

namespace whatif {

std::optional<ImpactType> parse_impact_type(std::string_view text) {
  if (text == "confidentiality" || text == "privacy") return ImpactType::Confidentiality;
  if (text == "integrity") return ImpactType::Integrity;
  if (text == "availability") return ImpactType::Availability;
  return std::nullopt;
}

std::string_view to_string(ImpactType type) {
  switch (type) {
    case ImpactType::Confidentiality: return "confidentiality";
    case ImpactType::Integrity: return "integrity";
    case ImpactType::Availability: return "availability";
  }
  return "?";
}

std::string Proposition::to_string() const {
  std::string s = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += args[i];
  }
  return s + ")";
}

namespace {

// Position of the compromise-type argument for predicates that carry one.
std::optional<std::size_t> typed_argument(const std::string& predicate) {
  if (predicate == "compromised" || predicate == "zcompromised") return 1;
  if (predicate == "vul_exists") return 4;
  return std::nullopt;
}

}  // namespace

PropId PropositionTable::intern(std::string predicate, std::vector<std::string> args) {
  if (auto pos = typed_argument(predicate)) {
    if (args.size() <= *pos) throw ValidationError(predicate + " is missing its compromise-type argument");
    auto type = parse_impact_type(args[*pos]);
    if (!type) throw ValidationError("invalid compromise type '" + args[*pos] + "' in " + predicate);
    args[*pos] = std::string(to_string(*type));
  }
  Proposition p{std::move(predicate), std::move(args)};
  auto key = p.to_string();
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const auto id = static_cast<PropId>(props_.size());
  props_.push_back(std::move(p));
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<PropId> PropositionTable::find(const std::string& predicate,
                                             const std::vector<std::string>& args) const {
  auto it = index_.find(Proposition{predicate, args}.to_string());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool holds(const Condition& condition, const Bitset& props) {
  for (const auto& lit : condition)
    if (props.test(lit.prop) == lit.negated) return false;
  return true;
}

void apply_effect(const Condition& post, Bitset& props) {
  for (const auto& lit : post)
    if (lit.negated) props.reset(lit.prop);
  for (const auto& lit : post)
    if (!lit.negated) props.set(lit.prop);
}

std::string describe(const Condition& condition, const PropositionTable& table) {
  if (condition.empty()) return "T";
  std::string s;
  for (std::size_t i = 0; i < condition.size(); ++i) {
    if (i) s += " & ";
    if (condition[i].negated) s += "!";
    s += table.get(condition[i].prop).to_string();
  }
  return s;
}

namespace {

void check_literals(const Condition& c, std::size_t universe, const std::string& where) {
  for (const auto& lit : c)
    if (lit.prop >= universe)
      throw ValidationError(where + " references proposition id " + std::to_string(lit.prop) +
                            " outside its partition");
}

}  // namespace

void validate(const PenTestTask& task) {
  if (!task.vocab) throw ValidationError("task has no vocabulary");
  const auto nnet = task.network_universe();
  const auto natt = task.attacker_universe();
  if (task.initial_attacker.universe() != natt)
    throw ValidationError("initial attacker state is not sized to the attacker partition");
  check_literals(task.goal, natt, "goal");
  for (const auto& a : task.actions) {
    const auto where = "action '" + a.id + "'";
    check_literals(a.pre_net, nnet, where + " network precondition");
    check_literals(a.pre_att, natt, where + " attacker precondition");
    if (a.outcomes.empty()) throw ValidationError(where + " has no outcomes");
    if (a.derivation) {
      if (a.cost != Cost::zero() || a.outcomes.size() != 1 || a.outcomes.front().probability != 1.0)
        throw ValidationError(where + ": derivation actions need cost 0 and one certain outcome");
    } else if (a.cost <= Cost::zero()) {
      throw ValidationError(where + " must have positive cost");
    }
    double total = 0.0;
    for (const auto& o : a.outcomes) {
      if (!(o.probability > 0.0 && o.probability <= 1.0))
        throw ValidationError(where + " has an outcome probability outside (0,1]");
      check_literals(o.post, natt, where + " postcondition");
      total += o.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError(where + " outcome probabilities do not sum to 1");
  }
}

void validate(const MitigationTask& task) {
  validate(task.pentest);
  const auto nnet = task.pentest.network_universe();
  if (task.initial_network.bits().universe() != nnet)
    throw ValidationError("initial network state is not sized to the network partition");
  for (const auto& f : task.fixes) {
    check_literals(f.pre, nnet, "fix '" + f.id + "' precondition");
    check_literals(f.post, nnet, "fix '" + f.id + "' postcondition");
    if (f.cost <= Cost::zero() || f.cost.is_infinite())
      throw ValidationError("fix '" + f.id + "' must have finite positive cost");
  }
  if (task.mitigation_budget < Cost::zero()) throw ValidationError("mitigation budget is negative");
}

bool action_applicable(const NetworkState& net, const AttackerState& att, const AttackerAction& action) {
  return holds(action.pre_net, net.bits()) && holds(action.pre_att, att.props) &&
         att.remaining_budget >= action.cost;
}

AttackerState apply_outcome(const AttackerState& att, const AttackerAction& action, const Outcome& outcome) {
  if (att.remaining_budget < action.cost)
    throw ContractViolation("budget underflow applying '" + action.id + "'");
  AttackerState next{att.props, att.remaining_budget - action.cost};
  apply_effect(outcome.post, next.props);
  return next;
}

bool goal_satisfied(const Bitset& attacker_props, const Condition& goal) { return holds(goal, attacker_props); }

bool fix_applicable(const NetworkState& net, const FixAction& fix) { return holds(fix.pre, net.bits()); }

std::vector<std::size_t> app_set(const NetworkState& net, std::span<const FixAction> fixes) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fixes.size(); ++i)
    if (fix_applicable(net, fixes[i])) out.push_back(i);
  return out;
}

NetworkState apply_fix(const NetworkState& net, const FixAction& fix) {
  if (!fix_applicable(net, fix)) throw ContractViolation("fix '" + fix.id + "' is not applicable");
  Bitset bits = net.bits();
  apply_effect(fix.post, bits);
  return NetworkState(std::move(bits));
}

NetworkState apply_strategy(const NetworkState& net, std::span<const FixAction> fixes,
                            std::span<const std::size_t> sequence) {
  NetworkState s = net;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto& f = fixes[sequence[i]];
    if (!fix_applicable(s, f))
      throw StrategyError(i, "step " + std::to_string(i) + " ('" + f.id + "') is not applicable");
    s = apply_fix(s, f);
  }
  return s;
}

MitigationStrategy make_strategy(std::span<const FixAction> fixes, std::vector<std::size_t> sequence) {
  MitigationStrategy s;
  for (auto i : sequence) s.cost += fixes[i].cost;
  s.fixes = std::move(sequence);
  return s;
}

}  // namespace whatif
