#include "whatif/acquisition.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "whatif/errors.hpp"

namespace whatif {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& path, const std::string& msg) {
  throw ValidationError(source + ": " + (path.empty() ? "/" : path) + ": " + msg);
}

std::string scalar_text(const Json& v, const std::string& source, const std::string& path) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  fail(source, path, "expected a string or integer");
}

Selector parse_selector(const Json& obj, const char* key, const std::string& source, const std::string& path) {
  Selector s;
  if (!obj.contains(key)) return s;
  const auto& v = obj.at(key);
  const std::string p = path + "/" + key;
  if (v.is_array()) {
    if (v.empty()) fail(source, p, "selector list is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto text = scalar_text(v[i], source, p + "/" + std::to_string(i));
      if (text == "*") return Selector{};
      s.values.push_back(std::move(text));
    }
    return s;
  }
  auto text = scalar_text(v, source, p);
  if (text != "*") s.values.push_back(std::move(text));
  return s;
}

Json selector_json(const Selector& s, bool numeric) {
  auto one = [&](const std::string& v) -> Json {
    if (numeric) return std::stoi(v);
    return v;
  };
  if (s.any()) return "*";
  if (s.values.size() == 1) return one(s.values.front());
  Json arr = Json::array();
  for (const auto& v : s.values) arr.push_back(one(v));
  return arr;
}

const Json& require(const Json& obj, const char* key, const std::string& source, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) fail(source, path, std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::string require_string(const Json& obj, const char* key, const std::string& source, const std::string& path) {
  const auto& v = require(obj, key, source, path);
  if (!v.is_string()) fail(source, path + "/" + key, "expected a string");
  return v.get<std::string>();
}

double require_number(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_number()) fail(source, path, "expected a number");
  return v.get<double>();
}

Cost parse_cost(const Json& v, const std::string& source, const std::string& path) {
  const double d = require_number(v, source, path);
  if (!(d > 0.0)) fail(source, path, "cost must be positive");
  try {
    return Cost::from_double(d);
  } catch (const std::exception& e) {
    fail(source, path, e.what());
  }
}

ImpactType parse_type(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_string()) fail(source, path, "expected a compromise type");
  auto t = parse_impact_type(v.get<std::string>());
  if (!t) fail(source, path, "unknown compromise type '" + v.get<std::string>() + "'");
  return *t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}


}  // namespace

bool Selector::matches(const std::string& value) const {
  return any() || std::find(values.begin(), values.end(), value) != values.end();
}

double CvssTable::probability(AccessComplexity c) const {
  switch (c) {
    case AccessComplexity::Low: return low;
    case AccessComplexity::Medium: return medium;
    case AccessComplexity::High: return high;
  }
  return medium;
}

std::string to_string(FixKind kind) {
  switch (kind) {
    case FixKind::Patch: return "patch";
    case FixKind::FirewallSubnet: return "firewall-subnet";
    case FixKind::FirewallHost: return "firewall-host";
  }
  return "?";
}

std::string to_string(AccessVector v) {
  switch (v) {
    case AccessVector::Network: return "network";
    case AccessVector::Adjacent: return "adjacent";
    case AccessVector::Local: return "local";
  }
  return "?";
}

std::string to_string(AccessComplexity c) {
  switch (c) {
    case AccessComplexity::Low: return "low";
    case AccessComplexity::Medium: return "medium";
    case AccessComplexity::High: return "high";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Documents

TopologyDoc parse_topology(const Json& j, const std::string& source) {
  if (!j.is_object()) fail(source, "", "expected an object");
  TopologyDoc doc;
  if (j.contains("subnets")) {
    const auto& arr = j.at("subnets");
    if (!arr.is_array()) fail(source, "/subnets", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/subnets/" + std::to_string(i);
      Subnet s;
      s.name = require_string(arr[i], "name", source, p);
      const auto& hosts = require(arr[i], "hosts", source, p);
      if (!hosts.is_array()) fail(source, p + "/hosts", "expected an array");
      for (std::size_t k = 0; k < hosts.size(); ++k) {
        if (!hosts[k].is_string()) fail(source, p + "/hosts/" + std::to_string(k), "expected a host name");
        s.hosts.push_back(hosts[k].get<std::string>());
      }
      doc.subnets.push_back(std::move(s));
    }
  }
  if (j.contains("connections")) {
    const auto& arr = j.at("connections");
    if (!arr.is_array()) fail(source, "/connections", "expected an array");
    std::vector<Connection> conns;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/connections/" + std::to_string(i);
      if (!arr[i].is_object()) fail(source, p, "expected an object");
      Connection c;
      require(arr[i], "from", source, p);
      require(arr[i], "to", source, p);
      c.from = parse_selector(arr[i], "from", source, p);
      c.to = parse_selector(arr[i], "to", source, p);
      c.port = parse_selector(arr[i], "port", source, p);
      c.proto = parse_selector(arr[i], "proto", source, p);
      for (auto& v : c.proto.values) v = lower(v);
      conns.push_back(std::move(c));
    }
    doc.connections = std::move(conns);
  }
  if (j.contains("controlled")) {
    const auto& arr = j.at("controlled");
    if (!arr.is_array()) fail(source, "/controlled", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) fail(source, "/controlled/" + std::to_string(i), "expected a subnet name");
      doc.controlled.push_back(arr[i].get<std::string>());
    }
  }
  if (j.contains("targets")) {
    const auto& arr = j.at("targets");
    if (!arr.is_array()) fail(source, "/targets", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "/targets/" + std::to_string(i);
      Target t;
      t.zone = require_string(arr[i], "zone", source, p);
      t.type = parse_type(require(arr[i], "type", source, p), source, p + "/type");
      doc.targets.push_back(t);
    }
  }
  return doc;
}

std::vector<VulnRecord> parse_vulns(const Json& j, const std::string& source) {
  if (!j.is_array()) fail(source, "", "expected an array of vulnerability records");
  std::vector<VulnRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "/" + std::to_string(i);
    const auto& r = j[i];
    VulnRecord v;
    v.cve = require_string(r, "cve", source, p);
    v.host = require_string(r, "host", source, p);
    const auto& port = require(r, "port", source, p);
    if (!port.is_number_integer() || port.get<long long>() < 0 || port.get<long long>() > 65535)
      fail(source, p + "/port", "port must be an integer in [0, 65535]");
    v.port = port.get<int>();
    v.proto = lower(require_string(r, "proto", source, p));
    v.impact = parse_type(require(r, "impact_type", source, p), source, p + "/impact_type");
    const auto vec = lower(require_string(r, "access_vector", source, p));
    if (vec == "network") v.vector = AccessVector::Network;
    else if (vec == "adjacent" || vec == "adjacent_network") v.vector = AccessVector::Adjacent;
    else if (vec == "local") v.vector = AccessVector::Local;
    else fail(source, p + "/access_vector", "unknown access vector '" + vec + "'");
    const auto cx = lower(require_string(r, "access_complexity", source, p));
    if (cx == "low") v.complexity = AccessComplexity::Low;
    else if (cx == "medium") v.complexity = AccessComplexity::Medium;
    else if (cx == "high") v.complexity = AccessComplexity::High;
    else fail(source, p + "/access_complexity", "unknown access complexity '" + cx + "'");
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<FixSchema> parse_fixes(const Json& j, const std::string& source) {
  if (!j.is_array()) fail(source, "", "expected an array of fix schemas");
  std::vector<FixSchema> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = "/" + std::to_string(i);
    const auto& r = j[i];
    FixSchema s;
    s.id = r.is_object() && r.contains("id") ? require_string(r, "id", source, p) : "fix" + std::to_string(i);
    if (!ids.insert(s.id).second) fail(source, p + "/id", "duplicate schema id '" + s.id + "'");
    const auto kind = require_string(r, "kind", source, p);
    if (kind == "patch") s.kind = FixKind::Patch;
    else if (kind == "firewall-subnet") s.kind = FixKind::FirewallSubnet;
    else if (kind == "firewall-host") s.kind = FixKind::FirewallHost;
    else fail(source, p + "/kind", "unknown kind '" + kind + "'");
    s.cve = parse_selector(r, "cve", source, p);
    s.host = parse_selector(r, "host", source, p);
    s.src = parse_selector(r, "src", source, p);
    s.dst = parse_selector(r, "dst", source, p);
    s.port = parse_selector(r, "port", source, p);
    s.proto = parse_selector(r, "proto", source, p);
    for (auto& v : s.proto.values) v = lower(v);
    if (r.contains("new_probability")) {
      s.new_probability = require_number(r.at("new_probability"), source, p + "/new_probability");
      if (s.new_probability < 0.0 || s.new_probability > 1.0)
        fail(source, p + "/new_probability", "must lie in [0, 1]");
      if (s.kind != FixKind::Patch && s.new_probability != 0.0)
        fail(source, p + "/new_probability", "only patch schemas may lower probabilities");
    }
    s.initial_cost = parse_cost(require(r, "initial_cost", source, p), source, p + "/initial_cost");
    if (r.contains("mode")) {
      const auto mode = require_string(r, "mode", source, p);
      if (mode == "combined") s.combined = true;
      else if (mode != "per-match") fail(source, p + "/mode", "unknown mode '" + mode + "'");
    }
    if (s.combined && !r.contains("subsequent_cost")) s.subsequent_cost = s.initial_cost;
    else s.subsequent_cost = parse_cost(require(r, "subsequent_cost", source, p), source, p + "/subsequent_cost");
    out.push_back(std::move(s));
  }
  return out;
}

RefinementDoc parse_refinements(const Json& j, const std::string& source) {
  RefinementDoc doc;
  const Json* list = &j;
  if (j.is_object()) {
    if (j.contains("cvss_probability")) {
      const auto& t = j.at("cvss_probability");
      auto get = [&](const char* key, double& out) {
        if (!t.contains(key)) return;
        out = require_number(t.at(key), source, std::string("/cvss_probability/") + key);
        if (!(out > 0.0 && out <= 1.0)) fail(source, std::string("/cvss_probability/") + key, "must lie in (0, 1]");
      };
      get("low", doc.cvss.low);
      get("medium", doc.cvss.medium);
      get("high", doc.cvss.high);
    }
    if (j.contains("integrity_full_compromise")) {
      const auto& f = j.at("integrity_full_compromise");
      if (!f.is_boolean()) fail(source, "/integrity_full_compromise", "expected a boolean");
      doc.integrity_full_compromise = f.get<bool>();
    }
    if (!j.contains("refinements")) return doc;
    list = &j.at("refinements");
  }
  if (!list->is_array()) fail(source, "", "expected an array of refinements");
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string p = (j.is_object() ? "/refinements/" : "/") + std::to_string(i);
    const auto& r = (*list)[i];
    if (!r.is_object()) fail(source, p, "expected an object");
    ActionRefinement a;
    a.cve = parse_selector(r, "cve", source, p);
    a.host = parse_selector(r, "host", source, p);
    a.port = parse_selector(r, "port", source, p);
    a.proto = parse_selector(r, "proto", source, p);
    for (auto& v : a.proto.values) v = lower(v);
    if (r.contains("cost")) a.cost = parse_cost(r.at("cost"), source, p + "/cost");
    if (r.contains("probability")) {
      const double q = require_number(r.at("probability"), source, p + "/probability");
      if (!(q > 0.0 && q <= 1.0)) fail(source, p + "/probability", "must lie in (0, 1]");
      a.probability = q;
    }
    doc.refinements.push_back(std::move(a));
  }
  return doc;
}

Json to_json(const TopologyDoc& doc) {
  Json j = Json::object();
  Json subnets = Json::array();
  for (const auto& s : doc.subnets) subnets.push_back({{"name", s.name}, {"hosts", s.hosts}});
  j["subnets"] = std::move(subnets);
  if (doc.connections) {
    Json conns = Json::array();
    for (const auto& c : *doc.connections)
      conns.push_back({{"from", selector_json(c.from, false)},
                       {"to", selector_json(c.to, false)},
                       {"port", selector_json(c.port, true)},
                       {"proto", selector_json(c.proto, false)}});
    j["connections"] = std::move(conns);
  }
  j["controlled"] = doc.controlled;
  Json targets = Json::array();
  for (const auto& t : doc.targets) targets.push_back({{"zone", t.zone}, {"type", std::string(to_string(t.type))}});
  j["targets"] = std::move(targets);
  return j;
}

Json to_json(const std::vector<VulnRecord>& vulns) {
  Json arr = Json::array();
  for (const auto& v : vulns)
    arr.push_back({{"cve", v.cve},
                   {"host", v.host},
                   {"port", v.port},
                   {"proto", v.proto},
                   {"impact_type", std::string(to_string(v.impact))},
                   {"access_vector", to_string(v.vector)},
                   {"access_complexity", to_string(v.complexity)}});
  return arr;
}

Json to_json(const std::vector<FixSchema>& fixes) {
  Json arr = Json::array();
  for (const auto& s : fixes) {
    Json r = {{"id", s.id}, {"kind", to_string(s.kind)}};
    if (s.kind == FixKind::Patch) {
      r["cve"] = selector_json(s.cve, false);
      r["host"] = selector_json(s.host, false);
    } else {
      r["src"] = selector_json(s.src, false);
      if (s.kind == FixKind::FirewallSubnet) r["dst"] = selector_json(s.dst, false);
      else r["host"] = selector_json(s.host, false);
    }
    r["port"] = selector_json(s.port, true);
    r["proto"] = selector_json(s.proto, false);
    r["new_probability"] = s.new_probability;
    r["initial_cost"] = s.initial_cost.to_double();
    r["subsequent_cost"] = s.subsequent_cost.to_double();
    if (s.combined) r["mode"] = "combined";
    arr.push_back(std::move(r));
  }
  return arr;
}

Json to_json(const RefinementDoc& doc) {
  Json refs = Json::array();
  for (const auto& a : doc.refinements) {
    Json r = {{"cve", selector_json(a.cve, false)},
              {"host", selector_json(a.host, false)},
              {"port", selector_json(a.port, true)},
              {"proto", selector_json(a.proto, false)}};
    if (a.cost) r["cost"] = a.cost->to_double();
    if (a.probability) r["probability"] = *a.probability;
    refs.push_back(std::move(r));
  }
  return {{"cvss_probability", {{"low", doc.cvss.low}, {"medium", doc.cvss.medium}, {"high", doc.cvss.high}}},
          {"integrity_full_compromise", doc.integrity_full_compromise},
          {"refinements", std::move(refs)}};
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < upto; ++i)
      if (text[i] == '\n') ++line;
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
}

ModelDocs read_model_dir(const fs::path& dir) {
  ModelDocs docs;
  const auto topo = dir / "topology.json";
  if (!fs::exists(topo)) throw ValidationError(topo.string() + ": missing model file");
  docs.topology = parse_topology(read_json_file(topo), topo.string());
  const auto vulns = dir / "vulns.json";
  if (!fs::exists(vulns)) throw ValidationError(vulns.string() + ": missing model file");
  docs.vulns = parse_vulns(read_json_file(vulns), vulns.string());
  if (const auto fixes = dir / "fixes.json"; fs::exists(fixes))
    docs.fixes = parse_fixes(read_json_file(fixes), fixes.string());
  if (const auto actions = dir / "actions.json"; fs::exists(actions))
    docs.actions = parse_refinements(read_json_file(actions), actions.string());
  return docs;
}

void write_model_dir(const ModelDocs& docs, const fs::path& dir) {
  fs::create_directories(dir);
  auto write = [&](const char* name, const Json& j) {
    std::ofstream out(dir / name);
    if (!out) throw ValidationError((dir / name).string() + ": cannot write file");
    out << j.dump(2) << "\n";
  };
  write("topology.json", to_json(docs.topology));
  write("vulns.json", to_json(docs.vulns));
  write("fixes.json", to_json(docs.fixes));
  write("actions.json", to_json(docs.actions));
}

// ---------------------------------------------------------------------------
// Instantiation

namespace {

struct Index {
  std::map<std::string, std::string> zone_of;  // host -> subnet
  std::map<std::string, const Subnet*> subnet;
  // (z1, z2, port, proto) connections open in the initial network, ordered.
  std::set<std::tuple<std::string, std::string, int, std::string>> haclz;

  explicit Index(const ModelDocs& docs) {
    for (const auto& s : docs.topology.subnets) {
      subnet[s.name] = &s;
      for (const auto& h : s.hosts) zone_of[h] = s.name;
    }
    std::set<std::pair<int, std::string>> ports;
    for (const auto& v : docs.vulns) ports.emplace(v.port, v.proto);
    for (const auto& z1 : docs.topology.subnets)
      for (const auto& z2 : docs.topology.subnets)
        for (const auto& [port, proto] : ports) {
          bool open = !docs.topology.connections;
          if (!open)
            for (const auto& c : *docs.topology.connections)
              if (c.from.matches(z1.name) && c.to.matches(z2.name) && c.port.matches(std::to_string(port)) &&
                  c.proto.matches(proto)) {
                open = true;
                break;
              }
          if (open) haclz.emplace(z1.name, z2.name, port, proto);
        }
  }
};

PropId subnet_prop(Vocabulary& v, const std::string& z, const std::string& h) { return v.network.intern("subnet", {z, h}); }
PropId haclz_prop(Vocabulary& v, const std::string& z1, const std::string& z2, int port, const std::string& proto) {
  return v.network.intern("haclz", {z1, z2, std::to_string(port), proto});
}
PropId vul_prop(Vocabulary& v, const VulnRecord& r) {
  return v.network.intern("vul_exists",
                          {r.cve, r.host, std::to_string(r.port), r.proto, std::string(to_string(r.impact))});
}
PropId compromised_prop(Vocabulary& v, const std::string& h, ImpactType t) {
  return v.attacker.intern("compromised", {h, std::string(to_string(t))});
}

// Interns the initial network facts in a fixed order and returns them.
std::vector<PropId> intern_network(const ModelDocs& docs, const Index& idx, Vocabulary& vocab) {
  std::vector<PropId> out;
  for (const auto& s : docs.topology.subnets)
    for (const auto& h : s.hosts) out.push_back(subnet_prop(vocab, s.name, h));
  for (const auto& [z1, z2, port, proto] : idx.haclz) out.push_back(haclz_prop(vocab, z1, z2, port, proto));
  for (const auto& v : docs.vulns) out.push_back(vul_prop(vocab, v));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void validate_docs(const ModelDocs& docs) {
  std::set<std::string> zones;
  std::map<std::string, std::string> host_zone;
  for (const auto& s : docs.topology.subnets) {
    if (!zones.insert(s.name).second) throw ValidationError("topology: duplicate subnet '" + s.name + "'");
    for (const auto& h : s.hosts)
      if (!host_zone.emplace(h, s.name).second)
        throw ValidationError("topology: host '" + h + "' belongs to more than one subnet");
  }
  for (const auto& z : docs.topology.controlled)
    if (!zones.count(z)) throw ValidationError("topology: controlled subnet '" + z + "' does not exist");
  for (const auto& t : docs.topology.targets)
    if (!zones.count(t.zone)) throw ValidationError("topology: target zone '" + t.zone + "' does not exist");
  if (docs.topology.connections)
    for (const auto& c : *docs.topology.connections)
      for (const auto* sel : {&c.from, &c.to})
        for (const auto& z : sel->values)
          if (!zones.count(z)) throw ValidationError("topology: connection references unknown subnet '" + z + "'");
  for (const auto& v : docs.vulns)
    if (!host_zone.count(v.host)) throw ValidationError("vulns: host '" + v.host + "' is not in any subnet");
}

std::vector<AttackerAction> instantiate_attacks(const ModelDocs& docs, Vocabulary& vocab) {
  validate_docs(docs);
  const Index idx(docs);
  intern_network(docs, idx, vocab);
  std::vector<AttackerAction> out;
  for (const auto& v : docs.vulns) {
    if (v.vector == AccessVector::Local) continue;
    const auto& z2 = idx.zone_of.at(v.host);
    double p = docs.actions.cvss.probability(v.complexity);
    Cost cost = Cost::from_double(1.0);
    for (const auto& r : docs.actions.refinements)
      if (r.cve.matches(v.cve) && r.host.matches(v.host) && r.port.matches(std::to_string(v.port)) &&
          r.proto.matches(v.proto)) {
        if (r.probability) p = *r.probability;
        if (r.cost) cost = *r.cost;
      }
    const PropId vul = vul_prop(vocab, v);
    Condition gained{{compromised_prop(vocab, v.host, v.impact), false}};
    if (docs.actions.integrity_full_compromise && v.impact == ImpactType::Integrity) {
      gained.push_back({compromised_prop(vocab, v.host, ImpactType::Confidentiality), false});
      gained.push_back({compromised_prop(vocab, v.host, ImpactType::Availability), false});
    }
    for (const auto& s1 : docs.topology.subnets) {
      if (v.vector == AccessVector::Adjacent && s1.name != z2) continue;
      if (!idx.haclz.count({s1.name, z2, v.port, v.proto})) continue;
      const PropId link = haclz_prop(vocab, s1.name, z2, v.port, v.proto);
      for (const auto& h1 : s1.hosts) {
        AttackerAction a;
        a.id = "exploit/" + v.cve + "/" + h1 + "/" + v.host + "/" + std::to_string(v.port) + "/" + v.proto + "/" +
               std::string(to_string(v.impact));
        a.pre_net = {{subnet_prop(vocab, s1.name, h1), false},
                     {subnet_prop(vocab, z2, v.host), false},
                     {link, false},
                     {vul, false}};
        a.pre_att = {{compromised_prop(vocab, h1, ImpactType::Integrity), false}};
        a.cost = cost;
        a.outcomes.push_back(Outcome{p, gained, "success"});
        if (p < 1.0) a.outcomes.push_back(Outcome{1.0 - p, {}, "fail"});
        out.push_back(std::move(a));
      }
    }
  }
  return out;
}

ThreatModel instantiate_threat_model(const TopologyDoc& topology, Vocabulary& vocab) {
  if (topology.targets.empty()) throw ValidationError("topology: no targets given; the attacker goal would be empty");
  std::map<std::string, const Subnet*> subnets;
  for (const auto& s : topology.subnets) subnets[s.name] = &s;
  ThreatModel tm;
  for (const auto& z : topology.controlled) {
    auto it = subnets.find(z);
    if (it == subnets.end()) throw ValidationError("topology: controlled subnet '" + z + "' does not exist");
    for (const auto& h : it->second->hosts) tm.initial.push_back(compromised_prop(vocab, h, ImpactType::Integrity));
  }
  std::set<std::pair<std::string, ImpactType>> seen;
  for (const auto& t : topology.targets) {
    auto it = subnets.find(t.zone);
    if (it == subnets.end()) throw ValidationError("topology: target zone '" + t.zone + "' does not exist");
    if (!seen.emplace(t.zone, t.type).second) continue;
    const std::string type(to_string(t.type));
    const PropId zc = vocab.attacker.intern("zcompromised", {t.zone, type});
    tm.goal.push_back({zc, false});
    for (const auto& h : it->second->hosts) {
      AttackerAction d;
      d.id = "derive/" + t.zone + "/" + type + "/" + h;
      d.pre_net = {{subnet_prop(vocab, t.zone, h), false}};
      d.pre_att = {{compromised_prop(vocab, h, t.type), false}};
      d.cost = Cost::zero();
      d.derivation = true;
      d.outcomes.push_back(Outcome{1.0, {{zc, false}}, "derive"});
      tm.derivations.push_back(std::move(d));
    }
  }
  std::sort(tm.initial.begin(), tm.initial.end());
  tm.initial.erase(std::unique(tm.initial.begin(), tm.initial.end()), tm.initial.end());
  return tm;
}

std::vector<FixAction> instantiate_fixes(const ModelDocs& docs, Vocabulary& vocab, std::vector<AttackerAction>& attacks,
                                         std::vector<std::string>* warnings) {
  validate_docs(docs);
  const Index idx(docs);
  intern_network(docs, idx, vocab);

  std::vector<FixAction> out;
  std::map<PropId, std::pair<PropId, double>> mitigation;  // vul_exists -> (mitigated, p')
  std::set<PropId> blockers;                               // hblocked props in use

  for (const auto& s : docs.fixes) {
    struct Match {
      std::string desc;
      Condition pre, post;
    };
    std::vector<Match> matches;
    const auto port_ok = [&](int port) { return s.port.matches(std::to_string(port)); };

    if (s.kind == FixKind::Patch) {
      std::set<PropId> done;
      for (const auto& v : docs.vulns) {
        if (!s.cve.matches(v.cve) || !s.host.matches(v.host) || !port_ok(v.port) || !s.proto.matches(v.proto)) continue;
        const PropId vul = vul_prop(vocab, v);
        if (!done.insert(vul).second) continue;
        const std::string desc = v.cve + "@" + v.host + ":" + std::to_string(v.port) + "/" + v.proto + "/" +
                                 std::string(to_string(v.impact));
        if (s.new_probability == 0.0) {
          matches.push_back({desc, {{vul, false}}, {{vul, true}}});
        } else {
          const auto& args = vocab.network.get(vul).args;
          const PropId m = vocab.network.intern("mitigated", args);
          auto [it, fresh] = mitigation.emplace(vul, std::make_pair(m, s.new_probability));
          if (!fresh && it->second.second != s.new_probability)
            throw ValidationError("fixes: conflicting reduced probabilities for " + desc);
          matches.push_back({desc, {{vul, false}, {m, true}}, {{m, false}}});
        }
      }
    } else if (s.kind == FixKind::FirewallSubnet) {
      for (const auto& [z1, z2, port, proto] : idx.haclz) {
        if (!s.src.matches(z1) || !s.dst.matches(z2) || !port_ok(port) || !s.proto.matches(proto)) continue;
        const PropId link = haclz_prop(vocab, z1, z2, port, proto);
        matches.push_back({z1 + "->" + z2 + ":" + std::to_string(port) + "/" + proto, {{link, false}}, {{link, true}}});
      }
    } else {
      std::set<std::tuple<std::string, std::string, int, std::string>> done;
      for (const auto& v : docs.vulns) {
        if (!s.host.matches(v.host) || !port_ok(v.port) || !s.proto.matches(v.proto)) continue;
        const auto& z2 = idx.zone_of.at(v.host);
        for (const auto& z1 : docs.topology.subnets) {
          if (!s.src.matches(z1.name) || !idx.haclz.count({z1.name, z2, v.port, v.proto})) continue;
          if (!done.emplace(z1.name, v.host, v.port, v.proto).second) continue;
          const PropId b = vocab.network.intern("hblocked", {z1.name, v.host, std::to_string(v.port), v.proto});
          blockers.insert(b);
          matches.push_back({z1.name + "->" + v.host + ":" + std::to_string(v.port) + "/" + v.proto, {{b, true}},
                             {{b, false}}});
        }
      }
    }

    if (matches.empty()) {
      if (warnings) warnings->push_back("fix schema '" + s.id + "' matches nothing");
      continue;
    }
    const PropId setup = vocab.network.intern("setup", {s.id});
    if (s.combined) {
      FixAction f{s.id + "/install", {{setup, true}}, {{setup, false}}, s.initial_cost};
      for (auto& m : matches) f.post.insert(f.post.end(), m.post.begin(), m.post.end());
      out.push_back(std::move(f));
      continue;
    }
    out.push_back(FixAction{s.id + "/setup", {{setup, true}}, {{setup, false}}, s.initial_cost});
    for (auto& m : matches) {
      FixAction f;
      f.id = s.id + "/" + m.desc;
      f.pre = {{setup, false}};
      f.pre.insert(f.pre.end(), m.pre.begin(), m.pre.end());
      f.post = std::move(m.post);
      f.cost = s.subsequent_cost;
      out.push_back(std::move(f));
    }
  }

  // Gate attack actions on the propositions the fixes introduced.
  std::vector<AttackerAction> copies;
  for (auto& a : attacks) {
    if (a.derivation) continue;
    std::optional<PropId> vul, link;
    for (const auto& l : a.pre_net) {
      const auto& pred = vocab.network.get(l.prop).predicate;
      if (pred == "vul_exists") vul = l.prop;
      if (pred == "haclz") link = l.prop;
    }
    if (link && vul) {
      const auto& la = vocab.network.get(*link).args;
      const auto& va = vocab.network.get(*vul).args;
      if (auto b = vocab.network.find("hblocked", {la[0], va[1], la[2], la[3]}); b && blockers.count(*b))
        a.pre_net.push_back({*b, true});
    }
    if (!vul) continue;
    auto it = mitigation.find(*vul);
    if (it == mitigation.end()) continue;
    const auto [m, p] = it->second;
    AttackerAction copy = a;
    copy.id = a.id + "/mitigated";
    copy.pre_net.push_back({m, false});
    const Condition success = a.outcomes.front().post;
    copy.outcomes = {Outcome{p, success, "success"}};
    if (p < 1.0) copy.outcomes.push_back(Outcome{1.0 - p, {}, "fail"});
    a.pre_net.push_back({m, true});
    copies.push_back(std::move(copy));
  }
  attacks.insert(attacks.end(), std::make_move_iterator(copies.begin()), std::make_move_iterator(copies.end()));

  std::sort(out.begin(), out.end(), [](const FixAction& x, const FixAction& y) { return x.id < y.id; });
  return out;
}

MitigationTask load_model(const ModelDocs& docs, std::vector<std::string>* warnings) {
  validate_docs(docs);
  auto vocab = std::make_shared<Vocabulary>();
  const Index idx(docs);
  const auto initial_net = intern_network(docs, idx, *vocab);
  auto attacks = instantiate_attacks(docs, *vocab);
  auto threat = instantiate_threat_model(docs.topology, *vocab);
  auto fixes = instantiate_fixes(docs, *vocab, attacks, warnings);

  attacks.insert(attacks.end(), std::make_move_iterator(threat.derivations.begin()),
                 std::make_move_iterator(threat.derivations.end()));
  std::sort(attacks.begin(), attacks.end(), [](const AttackerAction& x, const AttackerAction& y) { return x.id < y.id; });

  MitigationTask task;
  task.pentest.vocab = vocab;
  task.pentest.actions = std::move(attacks);
  task.pentest.initial_attacker = Bitset(vocab->attacker.size());
  for (auto p : threat.initial) task.pentest.initial_attacker.set(p);
  task.pentest.goal = std::move(threat.goal);
  task.initial_network = NetworkState(vocab->network.size());
  for (auto p : initial_net) task.initial_network.insert(p);
  task.fixes = std::move(fixes);
  validate(task);
  return task;
}

MitigationTask load_model_dir(const fs::path& dir, std::vector<std::string>* warnings) {
  return load_model(read_model_dir(dir), warnings);
}

}  // namespace whatif
