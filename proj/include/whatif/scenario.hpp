#pragma once

// Synthetic benchmark networks: zoned topology, Dirichlet-process host
// configurations, Poisson vulnerability and patch counts, firewall and patch
// fix schemas. Output goes through the regular model files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "whatif/acquisition.hpp"

namespace whatif {

/// Counter-based generator: output i is splitmix64(seed + i * golden).
/// The stream for a seed never changes between releases.
class ScenarioRng {
 public:
  static constexpr const char* kName = "splitmix64-ctr v1";

  explicit ScenarioRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Knuth's multiplication method; exact for moderate means.
  unsigned poisson(double lambda);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

struct CatalogVuln {
  std::string cve;
  int port = 0;
  std::string proto = "tcp";
  ImpactType impact = ImpactType::Integrity;
  AccessVector vector = AccessVector::Network;
  AccessComplexity complexity = AccessComplexity::Medium;
};

struct PatchRecord {
  std::string id;
  std::vector<std::string> closes;
};

std::vector<CatalogVuln> parse_vuln_catalog(const Json& j, const std::string& source = "vuln catalog");
std::vector<PatchRecord> parse_patch_catalog(const Json& j, const std::string& source = "patch catalog");

/// Catalogs shipped in the data directory.
std::vector<CatalogVuln> bundled_vuln_catalog();
std::vector<PatchRecord> bundled_patch_catalog();
std::filesystem::path bundled_data_dir();

struct GenParams {
  unsigned hosts = 40;
  double alpha_h = 2.0;
  double alpha_v = 5.0;
  double lambda_v = 5.0;
  /// Mean patches per configuration; each patched configuration yields one
  /// patch fix per host, so this is also the mean patch fixes per host.
  double lambda_f = 5.0;
  std::uint64_t seed = 1;

  unsigned user_branching = 2;
  unsigned user_subnet_capacity = 10;
  /// Share of catalog ports opened on each inter-zone connection.
  double open_port_fraction = 0.5;
  /// Share of DMZ / sensitive service ports that firewall fixes may not close.
  double protected_port_fraction = 0.5;

  double patch_initial_cost = 1.0;
  double patch_subsequent_cost = 1.0;
  double firewall_cost = 5.0;
  /// Written to actions.json; see RefinementDoc.
  bool integrity_full_compromise = true;

  std::vector<CatalogVuln> vuln_catalog;   ///< empty: bundled catalog
  std::vector<PatchRecord> patch_catalog;  ///< empty: bundled catalog

  void validate() const;
};

struct Configuration {
  std::vector<std::string> vulns;    ///< distinct cves, in draw order
  std::vector<std::string> patches;  ///< distinct patch ids
  unsigned sampled_vuln_count = 0;   ///< Poisson draw before deduplication
  unsigned sampled_patch_count = 0;  ///< Poisson draw before support capping
};

struct ConfigAssignment {
  std::vector<Configuration> configs;
  std::vector<std::size_t> host_config;  ///< per host, index into configs
};

struct ZoneLayout {
  std::string internet;
  std::string dmz;
  std::string sensitive;
  std::vector<std::string> user;  ///< breadth-first order, root first
};

struct GeneratedTopology {
  TopologyDoc doc;
  ZoneLayout zones;
  std::vector<std::string> attackable_hosts;  ///< all hosts except the internet host
};

GeneratedTopology generate_topology(const GenParams& params, ScenarioRng& rng);

/// Nested Chinese-restaurant sampling of `host_count` host configurations.
ConfigAssignment sample_configurations(const GenParams& params, ScenarioRng& rng, std::size_t host_count);

/// Draws patches per configuration (filling Configuration::patches) and
/// returns firewall and patch schemas for the generated network.
std::vector<FixSchema> sample_fixes(const GenParams& params, ScenarioRng& rng, const GeneratedTopology& topology,
                                    ConfigAssignment& assignment);

struct GeneratedScenario {
  ModelDocs docs;
  Json provenance;
  MitigationTask task;
  ConfigAssignment assignment;
};

/// Composes the samplers, serialises the model documents, and loads them
/// back through load_model.
GeneratedScenario generate_task(const GenParams& params);

/// Writes the four model files and provenance.json.
void write_scenario(const GeneratedScenario& scenario, const std::filesystem::path& dir);

}  // namespace whatif
