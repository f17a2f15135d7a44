#include "whatif/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "whatif/errors.hpp"

#ifndef WHATIF_DATA_DIR
#define WHATIF_DATA_DIR "data"
#endif

namespace whatif {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Random source

std::uint64_t ScenarioRng::next() {
  std::uint64_t z = seed_ + (++counter_) * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double ScenarioRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t ScenarioRng::below(std::uint64_t n) {
  if (n == 0) throw ContractViolation("ScenarioRng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const auto x = next();
    if (x < limit) return x % n;
  }
}

unsigned ScenarioRng::poisson(double lambda) {
  if (lambda <= 0.0) return 0;
  // Split large means so exp(-lambda) stays representable.
  unsigned total = 0;
  while (lambda > 30.0) {
    total += poisson(30.0);
    lambda -= 30.0;
  }
  const double limit = std::exp(-lambda);
  unsigned k = 0;
  double p = uniform();
  while (p > limit) {
    ++k;
    p *= uniform();
  }
  return total + k;
}

namespace {

// First k elements of a uniform random permutation of 0..n-1.
std::vector<std::size_t> sample_without_replacement(ScenarioRng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

std::size_t fraction_count(double fraction, std::size_t n) {
  if (n == 0) return 0;
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n))), 1, n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalogs

std::vector<CatalogVuln> parse_vuln_catalog(const Json& j, const std::string& source) {
  if (!j.is_array()) throw ValidationError(source + ": expected an array");
  Json copy = j;
  for (auto& r : copy)
    if (r.is_object()) r["host"] = "-";
  std::vector<CatalogVuln> out;
  std::set<std::string> seen;
  for (const auto& v : parse_vulns(copy, source)) {
    if (!seen.insert(v.cve).second) throw ValidationError(source + ": duplicate cve '" + v.cve + "'");
    out.push_back({v.cve, v.port, v.proto, v.impact, v.vector, v.complexity});
  }
  return out;
}

std::vector<PatchRecord> parse_patch_catalog(const Json& j, const std::string& source) {
  if (!j.is_array()) throw ValidationError(source + ": expected an array");
  std::vector<PatchRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string where = source + ": /" + std::to_string(i);
    if (!r.is_object() || !r.contains("id") || !r.at("id").is_string() || !r.contains("closes") ||
        !r.at("closes").is_array())
      throw ValidationError(where + ": expected {id, closes}");
    PatchRecord p{r.at("id").get<std::string>(), {}};
    for (const auto& c : r.at("closes")) {
      if (!c.is_string()) throw ValidationError(where + "/closes: expected cve strings");
      p.closes.push_back(c.get<std::string>());
    }
    if (p.closes.empty()) throw ValidationError(where + "/closes: must not be empty");
    out.push_back(std::move(p));
  }
  return out;
}

fs::path bundled_data_dir() {
  if (const char* env = std::getenv("WHATIF_DATA_DIR")) return env;
  return WHATIF_DATA_DIR;
}

std::vector<CatalogVuln> bundled_vuln_catalog() {
  const auto path = bundled_data_dir() / "catalog" / "vulns.json";
  return parse_vuln_catalog(read_json_file(path), path.string());
}

std::vector<PatchRecord> bundled_patch_catalog() {
  const auto path = bundled_data_dir() / "catalog" / "patches.json";
  return parse_patch_catalog(read_json_file(path), path.string());
}

void GenParams::validate() const {
  if (hosts < 3) throw ValidationError("host count must be at least 3");
  if (!(alpha_h > 0.0) || !(alpha_v > 0.0)) throw ValidationError("concentration parameters must be positive");
  if (!(lambda_v >= 0.0) || !(lambda_f >= 0.0)) throw ValidationError("Poisson means must be nonnegative");
  if (user_branching < 1 || user_subnet_capacity < 1) throw ValidationError("user tree shape must be positive");
  if (!(open_port_fraction > 0.0 && open_port_fraction <= 1.0))
    throw ValidationError("open port fraction must lie in (0, 1]");
  if (!(protected_port_fraction >= 0.0 && protected_port_fraction <= 1.0))
    throw ValidationError("protected port fraction must lie in [0, 1]");
  if (!(patch_initial_cost > 0.0 && patch_subsequent_cost > 0.0 && firewall_cost > 0.0))
    throw ValidationError("fix costs must be positive");
}

// ---------------------------------------------------------------------------
// Samplers

namespace {

std::vector<std::pair<int, std::string>> catalog_ports(const std::vector<CatalogVuln>& catalog) {
  std::set<std::pair<int, std::string>> ports;
  for (const auto& v : catalog) ports.emplace(v.port, v.proto);
  return {ports.begin(), ports.end()};
}

Selector one(std::string v) { return Selector{{std::move(v)}}; }

bool open_from_outside(const TopologyDoc& doc, const std::string& zone, int port, const std::string& proto) {
  for (const auto& c : *doc.connections)
    if (c.to.matches(zone) && c.port.matches(std::to_string(port)) && c.proto.matches(proto))
      for (const auto& s : doc.subnets)
        if (s.name != zone && c.from.matches(s.name)) return true;
  return false;
}

}  // namespace

GeneratedTopology generate_topology(const GenParams& params, ScenarioRng& rng) {
  params.validate();
  const auto& catalog = params.vuln_catalog;
  const unsigned quota = std::max(1u, params.hosts / 40);
  const unsigned users = params.hosts - 1 - 2 * quota;

  GeneratedTopology out;
  auto& doc = out.doc;
  out.zones.internet = "internet";
  out.zones.dmz = "dmz";
  out.zones.sensitive = "sensitive";
  doc.subnets.push_back({"internet", {"inet0"}});
  Subnet dmz{"dmz", {}}, sens{"sensitive", {}};
  for (unsigned i = 0; i < quota; ++i) {
    dmz.hosts.push_back("dmz" + std::to_string(i));
    sens.hosts.push_back("sens" + std::to_string(i));
  }
  doc.subnets.push_back(dmz);
  doc.subnets.push_back(sens);
  const unsigned cap = params.user_subnet_capacity;
  const unsigned user_subnets = (users + cap - 1) / cap;
  for (unsigned k = 0; k < user_subnets; ++k) {
    Subnet s{"user" + std::to_string(k), {}};
    for (unsigned h = k * cap; h < std::min(users, (k + 1) * cap); ++h) s.hosts.push_back("u" + std::to_string(h));
    out.zones.user.push_back(s.name);
    doc.subnets.push_back(std::move(s));
  }
  for (const auto& s : doc.subnets)
    if (s.name != "internet")
      for (const auto& h : s.hosts) out.attackable_hosts.push_back(h);

  std::vector<Connection> conns;
  for (const auto& s : doc.subnets) conns.push_back({one(s.name), one(s.name), {}, {}});
  for (unsigned k = 1; k < user_subnets; ++k) {
    const auto child = "user" + std::to_string(k);
    const auto parent = "user" + std::to_string((k - 1) / params.user_branching);
    conns.push_back({one(child), one(parent), {}, {}});
    conns.push_back({one(parent), one(child), {}, {}});
  }
  const auto ports = catalog_ports(catalog);
  auto filtered = [&](const std::string& from, const std::string& to) {
    for (auto i : sample_without_replacement(rng, ports.size(), fraction_count(params.open_port_fraction, ports.size())))
      conns.push_back({one(from), one(to), one(std::to_string(ports[i].first)), one(ports[i].second)});
  };
  filtered("internet", "dmz");
  filtered("dmz", "sensitive");
  filtered("sensitive", "dmz");
  for (unsigned k = 0; k < user_subnets; ++k) {
    const auto u = "user" + std::to_string(k);
    filtered(u, "sensitive");
    filtered("sensitive", u);
    if (k == 0) {
      filtered(u, "dmz");
      filtered("dmz", u);
    }
  }
  doc.connections = std::move(conns);
  doc.controlled = {"internet"};
  doc.targets = {{"sensitive", ImpactType::Confidentiality}};
  return out;
}

ConfigAssignment sample_configurations(const GenParams& params, ScenarioRng& rng, std::size_t host_count) {
  const auto& catalog = params.vuln_catalog;
  if (catalog.empty()) throw ValidationError("vulnerability catalog is empty");
  ConfigAssignment out;
  std::vector<std::size_t> draws;  // inner process: every catalog draw so far
  for (std::size_t i = 0; i < host_count; ++i) {
    const bool fresh = rng.uniform() < params.alpha_h / (params.alpha_h + static_cast<double>(i));
    if (!fresh) {
      out.host_config.push_back(out.host_config[rng.below(i)]);
      continue;
    }
    Configuration c;
    c.sampled_vuln_count = rng.poisson(params.lambda_v);
    for (unsigned k = 0; k < c.sampled_vuln_count; ++k) {
      const double m = static_cast<double>(draws.size());
      std::size_t idx;
      if (draws.empty() || rng.uniform() < params.alpha_v / (params.alpha_v + m)) idx = rng.below(catalog.size());
      else idx = draws[rng.below(draws.size())];
      draws.push_back(idx);
      const auto& cve = catalog[idx].cve;
      if (std::find(c.vulns.begin(), c.vulns.end(), cve) == c.vulns.end()) c.vulns.push_back(cve);
    }
    out.host_config.push_back(out.configs.size());
    out.configs.push_back(std::move(c));
  }
  return out;
}

std::vector<FixSchema> sample_fixes(const GenParams& params, ScenarioRng& rng, const GeneratedTopology& topology,
                                    ConfigAssignment& assignment) {
  std::map<std::string, const CatalogVuln*> by_cve;
  for (const auto& v : params.vuln_catalog) by_cve[v.cve] = &v;
  std::map<std::string, std::size_t> host_index;
  for (std::size_t i = 0; i < topology.attackable_hosts.size(); ++i) host_index[topology.attackable_hosts[i]] = i;

  std::vector<FixSchema> out;
  const auto firewall_cost = Cost::from_double(params.firewall_cost);
  for (const auto& s : topology.doc.subnets) {
    if (s.name == topology.zones.internet) continue;
    std::set<std::pair<int, std::string>> present;
    for (const auto& h : s.hosts)
      for (const auto& cve : assignment.configs[assignment.host_config[host_index.at(h)]].vulns) {
        const auto* v = by_cve.at(cve);
        present.emplace(v->port, v->proto);
      }
    std::vector<std::pair<int, std::string>> ports;
    for (const auto& pp : present)
      if (open_from_outside(topology.doc, s.name, pp.first, pp.second)) ports.push_back(pp);
    if (s.name == topology.zones.dmz || s.name == topology.zones.sensitive) {
      const std::size_t keep_open =
          params.protected_port_fraction > 0.0 ? fraction_count(params.protected_port_fraction, ports.size()) : 0;
      auto locked = sample_without_replacement(rng, ports.size(), keep_open);
      std::sort(locked.begin(), locked.end(), std::greater<>());
      for (auto i : locked) ports.erase(ports.begin() + static_cast<long>(i));
    }
    Selector sources;
    for (const auto& other : topology.doc.subnets)
      if (other.name != s.name) sources.values.push_back(other.name);
    for (const auto& [port, proto] : ports) {
      FixSchema f;
      f.id = "fw/" + s.name + "/" + std::to_string(port) + "/" + proto;
      f.kind = FixKind::FirewallSubnet;
      f.src = sources;
      f.dst = one(s.name);
      f.port = one(std::to_string(port));
      f.proto = one(proto);
      f.initial_cost = firewall_cost;
      f.subsequent_cost = firewall_cost;
      f.combined = true;
      out.push_back(std::move(f));
    }
  }

  const auto& patches = params.patch_catalog;
  for (std::size_t k = 0; k < assignment.configs.size(); ++k) {
    auto& c = assignment.configs[k];
    std::vector<std::size_t> support;
    for (std::size_t p = 0; p < patches.size(); ++p)
      for (const auto& cve : patches[p].closes)
        if (std::find(c.vulns.begin(), c.vulns.end(), cve) != c.vulns.end()) {
          support.push_back(p);
          break;
        }
    c.sampled_patch_count = rng.poisson(params.lambda_f);
    std::vector<std::string> hosts;
    for (std::size_t h = 0; h < assignment.host_config.size(); ++h)
      if (assignment.host_config[h] == k) hosts.push_back(topology.attackable_hosts[h]);
    for (auto i : sample_without_replacement(rng, support.size(), c.sampled_patch_count)) {
      const auto& patch = patches[support[i]];
      c.patches.push_back(patch.id);
      FixSchema f;
      f.id = "patch/" + patch.id + "/c" + std::to_string(k);
      f.kind = FixKind::Patch;
      for (const auto& cve : patch.closes)
        if (std::find(c.vulns.begin(), c.vulns.end(), cve) != c.vulns.end()) f.cve.values.push_back(cve);
      f.host.values = hosts;
      f.initial_cost = Cost::from_double(params.patch_initial_cost);
      f.subsequent_cost = Cost::from_double(params.patch_subsequent_cost);
      out.push_back(std::move(f));
    }
  }
  return out;
}

GeneratedScenario generate_task(const GenParams& input) {
  GenParams params = input;
  if (params.vuln_catalog.empty()) params.vuln_catalog = bundled_vuln_catalog();
  if (params.patch_catalog.empty()) params.patch_catalog = bundled_patch_catalog();
  params.validate();

  ScenarioRng rng(params.seed);
  GeneratedScenario out;
  auto topology = generate_topology(params, rng);
  out.assignment = sample_configurations(params, rng, topology.attackable_hosts.size());
  auto schemas = sample_fixes(params, rng, topology, out.assignment);

  std::map<std::string, const CatalogVuln*> by_cve;
  for (const auto& v : params.vuln_catalog) by_cve[v.cve] = &v;
  ModelDocs docs;
  docs.topology = topology.doc;
  docs.actions.integrity_full_compromise = params.integrity_full_compromise;
  for (std::size_t h = 0; h < topology.attackable_hosts.size(); ++h)
    for (const auto& cve : out.assignment.configs[out.assignment.host_config[h]].vulns) {
      const auto* v = by_cve.at(cve);
      docs.vulns.push_back({v->cve, topology.attackable_hosts[h], v->port, v->proto, v->impact, v->vector, v->complexity});
    }
  docs.fixes = std::move(schemas);

  // The task is built from the serialised documents only.
  const auto topo_text = to_json(docs.topology).dump();
  const auto vuln_text = to_json(docs.vulns).dump();
  const auto fix_text = to_json(docs.fixes).dump();
  const auto act_text = to_json(docs.actions).dump();
  out.docs.topology = parse_topology(Json::parse(topo_text));
  out.docs.vulns = parse_vulns(Json::parse(vuln_text));
  out.docs.fixes = parse_fixes(Json::parse(fix_text));
  out.docs.actions = parse_refinements(Json::parse(act_text));
  out.task = load_model(out.docs);

  out.provenance = {{"generator", "whatif scenario generator"},
                    {"generator_version", 1},
                    {"rng", ScenarioRng::kName},
                    {"seed", params.seed},
                    {"params",
                     {{"hosts", params.hosts},
                      {"alpha_h", params.alpha_h},
                      {"alpha_v", params.alpha_v},
                      {"lambda_v", params.lambda_v},
                      {"lambda_f", params.lambda_f},
                      {"user_branching", params.user_branching},
                      {"user_subnet_capacity", params.user_subnet_capacity},
                      {"open_port_fraction", params.open_port_fraction},
                      {"protected_port_fraction", params.protected_port_fraction},
                      {"patch_initial_cost", params.patch_initial_cost},
                      {"patch_subsequent_cost", params.patch_subsequent_cost},
                      {"firewall_cost", params.firewall_cost},
                      {"integrity_full_compromise", params.integrity_full_compromise},
                      {"vuln_catalog_size", params.vuln_catalog.size()},
                      {"patch_catalog_size", params.patch_catalog.size()}}}};
  return out;
}

void write_scenario(const GeneratedScenario& scenario, const fs::path& dir) {
  write_model_dir(scenario.docs, dir);
  std::ofstream out(dir / "provenance.json");
  if (!out) throw ValidationError((dir / "provenance.json").string() + ": cannot write file");
  out << scenario.provenance.dump(2) << "\n";
}

}  // namespace whatif
