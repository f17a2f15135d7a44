#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "whatif/acquisition.hpp"
#include "whatif/errors.hpp"
#include "whatif/mitigation.hpp"

using namespace whatif;

namespace {

const std::filesystem::path kRunningExample = std::filesystem::path(WHATIF_TEST_DATA_DIR) / "running_example";

ModelDocs small_docs() {
  ModelDocs d;
  d.topology = parse_topology(Json::parse(R"({
    "subnets": [{"name": "internet", "hosts": ["I"]}, {"name": "dmz", "hosts": ["W", "A"]}],
    "connections": [{"from": "internet", "to": "dmz", "port": 443, "proto": "tcp"},
                    {"from": "dmz", "to": "dmz", "port": "*", "proto": "*"}],
    "controlled": ["internet"],
    "targets": [{"zone": "dmz", "type": "privacy"}]
  })"));
  d.vulns = parse_vulns(Json::parse(R"([
    {"cve": "CVE-1", "host": "W", "port": 443, "proto": "tcp", "impact_type": "confidentiality",
     "access_vector": "network", "access_complexity": "low"}
  ])"));
  return d;
}

const AttackerAction* find_action(const MitigationTask& t, const std::string& prefix) {
  for (const auto& a : t.pentest.actions)
    if (a.id.rfind(prefix, 0) == 0) return &a;
  return nullptr;
}

std::size_t count_prefix(const std::vector<AttackerAction>& v, const std::string& prefix) {
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [&](const AttackerAction& a) { return a.id.rfind(prefix, 0) == 0; }));
}

double p_star(const MitigationTask& t, const NetworkState& s) {
  AttackPlanner planner(t.pentest);
  return planner.p_star(s);
}

}  // namespace

TEST_CASE("running example loads") {
  std::vector<std::string> warnings;
  const auto t = load_model_dir(kRunningExample, &warnings);
  CHECK(warnings.empty());
  const auto& net = t.pentest.vocab->network;
  for (auto [z, h] : {std::pair{"internet", "I"}, {"dmz", "W"}, {"dmz", "A"}, {"user", "S"}, {"sensitive", "D"}}) {
    const auto p = net.find("subnet", {z, h});
    REQUIRE(p);
    CHECK(t.initial_network.contains(*p));
  }
  const auto link = net.find("haclz", {"internet", "dmz", "443", "tcp"});
  REQUIRE(link);
  CHECK(t.initial_network.contains(*link));
  CHECK_FALSE(net.find("haclz", {"internet", "sensitive", "3306", "tcp"}).has_value());

  const auto& att = t.pentest.vocab->attacker;
  CHECK(t.pentest.initial_attacker.test(*att.find("compromised", {"I", "integrity"})));
  REQUIRE(t.pentest.goal.size() == 1);
  CHECK(att.get(t.pentest.goal[0].prop).to_string() == Proposition{"zcompromised", {"sensitive", "confidentiality"}}.to_string());

  const double p = p_star(t, t.initial_network);
  CHECK(p > 0.0);
  CHECK_NOTHROW(validate(t));
}

TEST_CASE("missing connections fall back to full connectivity") {
  auto d = small_docs();
  d.topology.connections.reset();
  d.vulns.push_back(d.vulns[0]);
  d.vulns[1].cve = "CVE-2";
  d.vulns[1].port = 22;
  const auto t = load_model(d);
  const auto& net = t.pentest.vocab->network;
  for (auto z1 : {"internet", "dmz"})
    for (auto port : {"443", "22"}) {
      const auto p = net.find("haclz", {z1, "dmz", port, "tcp"});
      REQUIRE(p);
      CHECK(t.initial_network.contains(*p));
    }
  // one action per attacking host and vulnerability
  CHECK(t.pentest.actions.size() == 2 * 3 + 2);
}

TEST_CASE("reference and schema errors") {
  auto d = small_docs();
  d.topology.targets[0].zone = "nowhere";
  CHECK_THROWS_AS(load_model(d), ValidationError);

  d = small_docs();
  d.topology.targets.clear();
  CHECK_THROWS_AS(load_model(d), ValidationError);

  d = small_docs();
  d.vulns[0].host = "ghost";
  CHECK_THROWS_AS(load_model(d), ValidationError);

  CHECK_THROWS_AS(parse_vulns(Json::parse(R"([{"cve": "X", "host": "W", "port": 70000, "proto": "tcp",
      "impact_type": "integrity", "access_vector": "network", "access_complexity": "low"}])")),
                  ValidationError);
  try {
    parse_vulns(Json::parse(R"([{"cve": "X", "host": "W", "port": 80, "proto": "tcp", "impact_type": "root",
        "access_vector": "network", "access_complexity": "low"}])"));
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("/0/impact_type") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_fixes(Json::parse(R"([{"id": "f", "kind": "patch", "initial_cost": -1}])")), ValidationError);
  CHECK_THROWS_AS(parse_fixes(Json::parse(R"([{"id": "f", "kind": "patch", "new_probability": 1.5}])")),
                  ValidationError);

  const auto bad = std::filesystem::temp_directory_path() / "whatif_bad.json";
  {
    std::ofstream out(bad);
    out << "{\n  \"subnets\": [\n  oops\n}";
  }
  try {
    read_json_file(bad);
    FAIL("expected a syntax error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("whatif_bad.json:3") != std::string::npos);
  }
}

TEST_CASE("access complexity maps to success probability") {
  auto d = small_docs();
  d.vulns = parse_vulns(Json::parse(R"([
    {"cve": "C-low", "host": "W", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "low"},
    {"cve": "C-med", "host": "W", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "medium"},
    {"cve": "C-high", "host": "W", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "high"}
  ])"));
  Vocabulary vocab;
  std::vector<AttackerAction> attacks;
  for (const auto& a : instantiate_attacks(d, vocab))
    if (a.id.find("/I/") != std::string::npos) attacks.push_back(a);
  REQUIRE(attacks.size() == 3);  // W and A also attack from inside the dmz
  CHECK(attacks[0].outcomes[0].probability == 0.2);
  CHECK(attacks[1].outcomes[0].probability == 0.5);
  CHECK(attacks[2].outcomes[0].probability == 0.8);
  for (const auto& a : attacks) {
    CHECK(a.cost == Cost::from_double(1));
    REQUIRE(a.outcomes.size() == 2);
    CHECK(a.outcomes[1].post.empty());
    CHECK(a.pre_net.size() == 4);
  }

  d.actions.cvss = CvssTable{0.9, 0.6, 0.3};
  Vocabulary v2;
  CHECK(instantiate_attacks(d, v2)[0].outcomes[0].probability == 0.9);
}

TEST_CASE("adjacent and local vectors") {
  auto d = small_docs();
  d.topology.connections->push_back(Connection{{{"internet"}}, {{"dmz"}}, {{"22"}}, {{"tcp"}}});
  d.vulns = parse_vulns(Json::parse(R"([
    {"cve": "ADJ", "host": "W", "port": 22, "proto": "tcp", "impact_type": "integrity", "access_vector": "adjacent", "access_complexity": "low"},
    {"cve": "LOC", "host": "W", "port": 22, "proto": "tcp", "impact_type": "integrity", "access_vector": "local", "access_complexity": "low"}
  ])"));
  Vocabulary vocab;
  const auto attacks = instantiate_attacks(d, vocab);
  CHECK(count_prefix(attacks, "exploit/LOC/") == 0);
  CHECK(count_prefix(attacks, "exploit/ADJ/") == 2);  // from W and A only
  CHECK(count_prefix(attacks, "exploit/ADJ/I/") == 0);
}

TEST_CASE("refinements override matching actions only") {
  auto d = small_docs();
  d.vulns.push_back(d.vulns[0]);
  d.vulns[1].cve = "CVE-2";
  d.actions = parse_refinements(Json::parse(R"({"refinements": [{"cve": "CVE-2", "probability": 0.9, "cost": 4}]})"));
  const auto t = load_model(d);
  const auto* a1 = find_action(t, "exploit/CVE-1/I/");
  const auto* a2 = find_action(t, "exploit/CVE-2/I/");
  REQUIRE(a1);
  REQUIRE(a2);
  CHECK(a1->outcomes[0].probability == 0.2);
  CHECK(a1->cost == Cost::from_double(1));
  CHECK(a2->outcomes[0].probability == 0.9);
  CHECK(a2->cost == Cost::from_double(4));
}

TEST_CASE("threat model") {
  auto d = small_docs();
  Vocabulary vocab;
  auto tm = instantiate_threat_model(d.topology, vocab);
  REQUIRE(tm.initial.size() == 1);
  CHECK(vocab.attacker.get(tm.initial[0]).to_string() == Proposition{"compromised", {"I", "integrity"}}.to_string());
  REQUIRE(tm.goal.size() == 1);
  CHECK(tm.derivations.size() == 2);
  for (const auto& a : tm.derivations) {
    CHECK(a.derivation);
    CHECK(a.cost == Cost::zero());
    CHECK(a.outcomes.size() == 1);
  }

  d.topology.targets.push_back(Target{"internet", ImpactType::Integrity});
  Vocabulary v2;
  CHECK(instantiate_threat_model(d.topology, v2).goal.size() == 2);
}

TEST_CASE("fix schema expansion") {
  auto d = small_docs();
  d.vulns = parse_vulns(Json::parse(R"([
    {"cve": "CVE-W", "host": "W", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "low"},
    {"cve": "CVE-W", "host": "A", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "low"},
    {"cve": "CVE-W", "host": "I", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "low"},
    {"cve": "CVE-X", "host": "W", "port": 443, "proto": "tcp", "impact_type": "integrity", "access_vector": "network", "access_complexity": "low"}
  ])"));
  d.fixes = parse_fixes(Json::parse(R"([
    {"id": "pw", "kind": "patch", "cve": "CVE-W", "host": "*", "initial_cost": 7, "subsequent_cost": 2},
    {"id": "none", "kind": "patch", "cve": "CVE-NOPE", "initial_cost": 1, "subsequent_cost": 1}
  ])"));
  std::vector<std::string> warnings;
  const auto t = load_model(d, &warnings);
  REQUIRE(t.fixes.size() == 4);
  CHECK(t.fixes[3].id == "pw/setup");
  CHECK(t.fixes[3].cost == Cost::from_double(7));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(t.fixes[i].cost == Cost::from_double(2));
    CHECK(t.fixes[i].pre.size() == 2);
  }
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("none") != std::string::npos);

  // setup gate: install then rule, never rule first
  CHECK_FALSE(fix_applicable(t.initial_network, t.fixes[0]));
  const auto s1 = apply_fix(t.initial_network, t.fixes[3]);
  CHECK(fix_applicable(s1, t.fixes[0]));
  CHECK_FALSE(fix_applicable(s1, t.fixes[3]));
  const std::vector<std::size_t> seq{3, 0};
  CHECK(make_strategy(t.fixes, seq).cost == Cost::from_double(9));
  const std::vector<std::size_t> wrong{0, 3};
  CHECK_THROWS_AS(apply_strategy(t.initial_network, t.fixes, wrong), StrategyError);
}

TEST_CASE("firewall install and rule on the running example") {
  const auto t = load_model_dir(kRunningExample);
  std::size_t setup = t.fixes.size(), rule = t.fixes.size();
  for (std::size_t i = 0; i < t.fixes.size(); ++i) {
    if (t.fixes[i].id == "perimeter/setup") setup = i;
    if (t.fixes[i].id == "perimeter/internet->dmz:443/tcp") rule = i;
  }
  REQUIRE(setup < t.fixes.size());
  REQUIRE(rule < t.fixes.size());
  CHECK(t.fixes[setup].cost == Cost::from_double(100));
  CHECK(t.fixes[rule].cost == Cost::from_double(5));
  REQUIRE(t.fixes[setup].pre.size() == 1);
  CHECK(t.fixes[setup].pre[0].negated);
  const std::vector<std::size_t> seq{setup, rule};
  const auto s = apply_strategy(t.initial_network, t.fixes, seq);
  CHECK(p_star(t, s) == 0.0);
}

TEST_CASE("reduced probability patches") {
  auto d = small_docs();
  d.fixes = parse_fixes(Json::parse(R"([{"id": "hard", "kind": "patch", "cve": "CVE-1", "new_probability": 0.1,
                                         "initial_cost": 1, "subsequent_cost": 1}])"));
  const auto t = load_model(d);
  const auto m = t.pentest.vocab->network.find("mitigated", {"CVE-1", "W", "443", "tcp", "confidentiality"});
  REQUIRE(m);
  const auto* original = find_action(t, "exploit/CVE-1/I/W/443/tcp/confidentiality");
  REQUIRE(original);
  CHECK(std::find(original->pre_net.begin(), original->pre_net.end(), Literal{*m, true}) != original->pre_net.end());
  const auto* copy = find_action(t, "exploit/CVE-1/I/W/443/tcp/confidentiality/mitigated");
  REQUIRE(copy);
  CHECK(copy->outcomes[0].probability == 0.1);

  CHECK(p_star(t, t.initial_network) == doctest::Approx(0.2).epsilon(1e-12));
  std::vector<std::size_t> seq;
  for (std::size_t i = 0; i < t.fixes.size(); ++i)
    if (t.fixes[i].id == "hard/setup") seq.insert(seq.begin(), i);
    else seq.push_back(i);
  const auto s = apply_strategy(t.initial_network, t.fixes, seq);
  CHECK(std::abs(p_star(t, s) - 0.1) <= 1e-12);
}

TEST_CASE("host firewalls gate matching attacks") {
  auto d = small_docs();
  d.fixes = parse_fixes(Json::parse(R"([{"id": "hfw", "kind": "firewall-host", "host": "W", "src": "internet",
                                         "initial_cost": 4, "subsequent_cost": 1}])"));
  const auto t = load_model(d);
  REQUIRE(t.fixes.size() == 2);
  CHECK(p_star(t, t.initial_network) > 0.0);
  const std::vector<std::size_t> seq{1, 0};
  CHECK(t.fixes[1].id == "hfw/setup");
  CHECK(p_star(t, apply_strategy(t.initial_network, t.fixes, seq)) == 0.0);
}

TEST_CASE("partition discipline and determinism") {
  const auto a = load_model_dir(kRunningExample);
  const auto b = load_model_dir(kRunningExample);
  REQUIRE(a.pentest.actions.size() == b.pentest.actions.size());
  for (std::size_t i = 0; i < a.pentest.actions.size(); ++i) {
    CHECK(a.pentest.actions[i].id == b.pentest.actions[i].id);
    CHECK(a.pentest.actions[i].pre_net == b.pentest.actions[i].pre_net);
    for (const auto& o : a.pentest.actions[i].outcomes)
      for (const auto& l : o.post) CHECK(l.prop < a.pentest.attacker_universe());
  }
  REQUIRE(a.fixes.size() == b.fixes.size());
  for (std::size_t i = 0; i < a.fixes.size(); ++i) {
    CHECK(a.fixes[i].id == b.fixes[i].id);
    CHECK(a.fixes[i].post == b.fixes[i].post);
    for (const auto& l : a.fixes[i].post) CHECK(l.prop < a.pentest.network_universe());
  }
}

TEST_CASE("documents survive a JSON round trip") {
  const auto docs = read_model_dir(kRunningExample);
  const auto dir = std::filesystem::temp_directory_path() / "whatif_roundtrip";
  std::filesystem::remove_all(dir);
  write_model_dir(docs, dir);
  const auto again = read_model_dir(dir);
  CHECK(to_json(again.topology) == to_json(docs.topology));
  CHECK(to_json(again.vulns) == to_json(docs.vulns));
  CHECK(to_json(again.fixes) == to_json(docs.fixes));
  CHECK(to_json(again.actions) == to_json(docs.actions));
}

TEST_CASE("integrity compromise can imply full compromise") {
  auto d = small_docs();
  d.vulns[0].impact = ImpactType::Integrity;
  CHECK(p_star(load_model(d), load_model(d).initial_network) == 0.0);
  d.actions.integrity_full_compromise = true;
  const auto t = load_model(d);
  CHECK(p_star(t, t.initial_network) == doctest::Approx(0.2));
}
