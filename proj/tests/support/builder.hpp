#pragma once

// Hand-built tasks by proposition name. "!x" denotes the negated literal.

#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "whatif/model.hpp"

namespace whatif::testing {

struct OutcomeSpec {
  double p;
  std::vector<std::string> post;
};

class TaskBuilder {
 public:
  TaskBuilder();

  PropId net(const std::string& name);
  PropId att(const std::string& name);
  Condition net_lits(std::initializer_list<std::string> names);
  Condition att_lits(std::initializer_list<std::string> names);

  TaskBuilder& network(std::initializer_list<std::string> names);
  TaskBuilder& attacker(std::initializer_list<std::string> names);
  TaskBuilder& goal(std::initializer_list<std::string> names);
  TaskBuilder& action(const std::string& id, std::initializer_list<std::string> pre_net,
                      std::initializer_list<std::string> pre_att, double cost, std::vector<OutcomeSpec> outcomes);
  TaskBuilder& fix(const std::string& id, std::initializer_list<std::string> pre,
                   std::initializer_list<std::string> post, double cost);
  TaskBuilder& attack_budget(Cost b);
  TaskBuilder& mitigation_budget(Cost b);

  MitigationTask build() const;

  /// Fix index by id in the built task.
  std::size_t fix_index(const std::string& id) const;

 private:
  Literal literal(const std::string& text, bool network);

  std::shared_ptr<Vocabulary> vocab_;
  std::vector<std::string> net_init_, att_init_;
  Condition goal_;
  std::vector<AttackerAction> actions_;
  std::vector<FixAction> fixes_;
  Cost attack_budget_ = Cost::infinite();
  Cost mitigation_budget_ = Cost::infinite();
};

/// Builds a state of the task's network partition from proposition names.
NetworkState network_state(const MitigationTask& task, std::initializer_list<std::string> names);

}  // namespace whatif::testing
