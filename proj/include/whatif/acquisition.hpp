#pragma once

// Declarative model files and their instantiation into a mitigation task:
// topology, vulnerability catalog, fix schemas and attack refinements.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "whatif/model.hpp"

namespace whatif {

using Json = nlohmann::ordered_json;

enum class AccessVector { Network, Adjacent, Local };
enum class AccessComplexity { Low, Medium, High };

struct VulnRecord {
  std::string cve;
  std::string host;
  int port = 0;
  std::string proto = "tcp";
  ImpactType impact = ImpactType::Integrity;
  AccessVector vector = AccessVector::Network;
  AccessComplexity complexity = AccessComplexity::Medium;
};

/// Field matcher: empty means the wildcard "*", otherwise any listed value.
struct Selector {
  std::vector<std::string> values;

  bool any() const { return values.empty(); }
  bool matches(const std::string& value) const;
};

struct Subnet {
  std::string name;
  std::vector<std::string> hosts;
};

struct Connection {
  Selector from, to, port, proto;
};

struct Target {
  std::string zone;
  ImpactType type = ImpactType::Confidentiality;
};

struct TopologyDoc {
  std::vector<Subnet> subnets;
  /// Absent: every subnet reaches every subnet on every observed port.
  std::optional<std::vector<Connection>> connections;
  std::vector<std::string> controlled;
  std::vector<Target> targets;
};

enum class FixKind { Patch, FirewallSubnet, FirewallHost };

struct FixSchema {
  std::string id;
  FixKind kind = FixKind::Patch;
  Selector cve, host, src, dst, port, proto;
  double new_probability = 0.0;
  Cost initial_cost = Cost::from_double(1.0);
  Cost subsequent_cost = Cost::from_double(1.0);
  /// One fix applying every match at initial_cost, instead of a setup fix
  /// followed by per-match fixes at subsequent_cost.
  bool combined = false;
};

struct ActionRefinement {
  Selector cve, host, port, proto;
  std::optional<Cost> cost;
  std::optional<double> probability;
};

/// Success probability per access complexity.
struct CvssTable {
  double low = 0.2;
  double medium = 0.5;
  double high = 0.8;

  double probability(AccessComplexity c) const;
};

struct RefinementDoc {
  CvssTable cvss;
  std::vector<ActionRefinement> refinements;
  /// Treat an integrity compromise as full host compromise: a successful
  /// integrity exploit also yields confidentiality and availability.
  bool integrity_full_compromise = false;
};

struct ModelDocs {
  TopologyDoc topology;
  std::vector<VulnRecord> vulns;
  std::vector<FixSchema> fixes;
  RefinementDoc actions;
};

// Parsing and serialisation. `source` names the document in error messages.
TopologyDoc parse_topology(const Json& j, const std::string& source = "topology.json");
std::vector<VulnRecord> parse_vulns(const Json& j, const std::string& source = "vulns.json");
std::vector<FixSchema> parse_fixes(const Json& j, const std::string& source = "fixes.json");
RefinementDoc parse_refinements(const Json& j, const std::string& source = "actions.json");

Json to_json(const TopologyDoc& doc);
Json to_json(const std::vector<VulnRecord>& vulns);
Json to_json(const std::vector<FixSchema>& fixes);
Json to_json(const RefinementDoc& doc);

/// Reads a JSON file, reporting syntax errors with file and line.
Json read_json_file(const std::filesystem::path& path);

/// Reads topology.json, vulns.json, fixes.json and actions.json from a
/// directory. The topology, fixes and actions files are optional.
ModelDocs read_model_dir(const std::filesystem::path& dir);
void write_model_dir(const ModelDocs& docs, const std::filesystem::path& dir);

/// Checks cross references: hosts in one subnet, known zones and hosts.
void validate_docs(const ModelDocs& docs);

/// Attacker actions for every vulnerability and attacking host (before fix
/// schemas add gating literals). Interns the propositions they use.
std::vector<AttackerAction> instantiate_attacks(const ModelDocs& docs, Vocabulary& vocab);

struct ThreatModel {
  std::vector<PropId> initial;  ///< attacker propositions true initially
  Condition goal;
  std::vector<AttackerAction> derivations;
};

ThreatModel instantiate_threat_model(const TopologyDoc& topology, Vocabulary& vocab);

/// Expands fix schemas into fix-actions. Partial-probability patches and
/// host firewalls add gating literals to `attacks` (and, for patches,
/// reduced-probability copies).
std::vector<FixAction> instantiate_fixes(const ModelDocs& docs, Vocabulary& vocab,
                                         std::vector<AttackerAction>& attacks,
                                         std::vector<std::string>* warnings = nullptr);

/// Full instantiation. Budgets are left unlimited.
MitigationTask load_model(const ModelDocs& docs, std::vector<std::string>* warnings = nullptr);
MitigationTask load_model_dir(const std::filesystem::path& dir, std::vector<std::string>* warnings = nullptr);

std::string to_string(FixKind kind);
std::string to_string(AccessVector v);
std::string to_string(AccessComplexity c);

}  // namespace whatif
