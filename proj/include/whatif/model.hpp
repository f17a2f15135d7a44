#pragma once

// Formal objects shared by attack planning and mitigation analysis: interned
// propositions split into a network and an attacker partition, literals,
// states, attacker and fix actions, and their transition semantics.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "whatif/bitset.hpp"
#include "whatif/cost.hpp"

namespace whatif {

using PropId = std::uint32_t;

enum class ImpactType : std::uint8_t { Confidentiality, Integrity, Availability };

/// Accepts the three CIA names and "privacy" as an alias of confidentiality.
std::optional<ImpactType> parse_impact_type(std::string_view text);
std::string_view to_string(ImpactType type);

struct Proposition {
  std::string predicate;
  std::vector<std::string> args;

  std::string to_string() const;
  friend bool operator==(const Proposition&, const Proposition&) = default;
};

/// Interns propositions of one partition into dense ids. Structurally equal
/// propositions always receive the same id. Predicates carrying a compromise
/// type (compromised, zcompromised, vul_exists) have that argument validated
/// and normalised.
class PropositionTable {
 public:
  PropId intern(std::string predicate, std::vector<std::string> args);
  std::optional<PropId> find(const std::string& predicate, const std::vector<std::string>& args) const;
  const Proposition& get(PropId id) const { return props_.at(id); }
  std::size_t size() const { return props_.size(); }

 private:
  std::vector<Proposition> props_;
  std::unordered_map<std::string, PropId> index_;
};

struct Vocabulary {
  PropositionTable network;
  PropositionTable attacker;
};

struct Literal {
  PropId prop = 0;
  bool negated = false;

  Literal complement() const { return {prop, !negated}; }
  friend auto operator<=>(const Literal&, const Literal&) = default;
};

using Condition = std::vector<Literal>;

/// Closed-world evaluation of a conjunction of literals.
bool holds(const Condition& condition, const Bitset& props);

/// Removes negated propositions, then adds positive ones.
void apply_effect(const Condition& post, Bitset& props);

std::string describe(const Condition& condition, const PropositionTable& table);

class NetworkState {
 public:
  NetworkState() = default;
  explicit NetworkState(std::size_t universe) : bits_(universe) {}
  explicit NetworkState(Bitset bits) : bits_(std::move(bits)) {}

  bool contains(PropId p) const { return bits_.test(p); }
  void insert(PropId p) { bits_.set(p); }
  void erase(PropId p) { bits_.reset(p); }
  const Bitset& bits() const { return bits_; }
  std::size_t hash() const { return bits_.hash(); }

  friend bool operator==(const NetworkState&, const NetworkState&) = default;

 private:
  Bitset bits_;
};

struct NetworkStateHash {
  std::size_t operator()(const NetworkState& s) const { return s.hash(); }
};

struct AttackerState {
  Bitset props;
  Cost remaining_budget = Cost::infinite();
};

struct Outcome {
  double probability = 1.0;
  Condition post;  ///< attacker literals only
  std::string name;
};

struct AttackerAction {
  std::string id;
  Condition pre_net;
  Condition pre_att;
  Cost cost = Cost::from_units(Cost::kUnitsPerOne);
  std::vector<Outcome> outcomes;
  /// Zone-derivation bookkeeping action: zero cost, one certain outcome.
  bool derivation = false;
};

struct PenTestTask {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<AttackerAction> actions;
  Bitset initial_attacker;
  Condition goal;
  Cost attacker_budget = Cost::infinite();

  std::size_t network_universe() const { return vocab->network.size(); }
  std::size_t attacker_universe() const { return vocab->attacker.size(); }
  AttackerState initial_state() const { return {initial_attacker, attacker_budget}; }
};

struct FixAction {
  std::string id;
  Condition pre;
  Condition post;
  Cost cost = Cost::from_units(Cost::kUnitsPerOne);
};

struct MitigationTask {
  PenTestTask pentest;
  NetworkState initial_network;
  std::vector<FixAction> fixes;
  Cost mitigation_budget = Cost::infinite();
};

/// Sequence of indices into MitigationTask::fixes plus its summed cost.
struct MitigationStrategy {
  std::vector<std::size_t> fixes;
  Cost cost = Cost::zero();
};

/// Throws ValidationError on any broken task invariant.
void validate(const PenTestTask& task);
void validate(const MitigationTask& task);

bool action_applicable(const NetworkState& net, const AttackerState& att, const AttackerAction& action);

/// Throws ContractViolation if the action's cost exceeds the remaining budget.
AttackerState apply_outcome(const AttackerState& att, const AttackerAction& action, const Outcome& outcome);

bool goal_satisfied(const Bitset& attacker_props, const Condition& goal);

bool fix_applicable(const NetworkState& net, const FixAction& fix);

/// Indices of applicable fixes, in input order.
std::vector<std::size_t> app_set(const NetworkState& net, std::span<const FixAction> fixes);

/// Throws ContractViolation if the fix is not applicable.
NetworkState apply_fix(const NetworkState& net, const FixAction& fix);

/// Left fold of apply_fix. Throws StrategyError naming the first inapplicable step.
NetworkState apply_strategy(const NetworkState& net, std::span<const FixAction> fixes,
                            std::span<const std::size_t> sequence);

MitigationStrategy make_strategy(std::span<const FixAction> fixes, std::vector<std::size_t> sequence);

}  // namespace whatif
