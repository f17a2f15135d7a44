#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace {

const std::string kCli = WHATIF_CLI_PATH;
const std::string kExample = std::string(WHATIF_TEST_DATA_DIR) + "/running_example";

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  const std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path temp(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("whatif_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("plan") {
  auto r = run("plan " + kExample);
  CHECK(r.code == 0);
  CHECK(r.out.find("p* = 0.64") != std::string::npos);

  r = run("--json plan " + kExample);
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["reachable"] == true);
  CHECK(j["success_probability"].get<double>() == doctest::Approx(0.64));
  CHECK_FALSE(j["steps"].empty());

  CHECK(run("plan " + kExample + " --budget 0").code == 3);
}

TEST_CASE("validation errors") {
  CHECK(run("plan /nonexistent/model").code == 2);
  const auto dir = temp("broken");
  std::filesystem::create_directories(dir);
  std::filesystem::copy(kExample, dir, std::filesystem::copy_options::recursive);
  {
    std::ofstream out(dir / "vulns.json");
    out << "[{\"cve\": 1}]";
  }
  CHECK(run("plan " + dir.string()).code == 2);
  CHECK(run("sweep --gamma-m 0.5 --host-counts 10 --seeds 1").code == 2);
  CHECK(run("no-such-command").code == 2);
}

TEST_CASE("budgets and mitigate") {
  auto r = run("--json budgets " + kExample);
  REQUIRE(r.code == 0);
  const auto b = nlohmann::json::parse(r.out);
  CHECK(b["attack_budget"] == 2);
  CHECK(b["mitigation_budget"] == 20);

  const auto out = temp("frontier.json");
  r = run("mitigate " + kExample + " -o " + out.string());
  CHECK(r.code == 0);
  std::ifstream in(out);
  const auto f = nlohmann::json::parse(in);
  CHECK(f["complete"] == true);
  CHECK(f["frontier"].size() == 3);
  CHECK(f["frontier"][2]["cost"] == 105);
  CHECK(f["frontier"][2]["p_star"] == 0);

  CHECK(run("--no-sss --no-sleep-sets --no-ofix --no-oatt --no-c0 mitigate " + kExample).code == 0);
}

TEST_CASE("generate, then hit a limit") {
  const auto dir = temp("gen");
  CHECK(run("--seed 2 generate -o " + dir.string() + " --hosts 80").code == 0);
  for (auto f : {"topology.json", "vulns.json", "fixes.json", "actions.json", "provenance.json"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(run("--time-limit 0.000001 mitigate " + dir.string()).code == 4);
}

TEST_CASE("sweep and variance outputs") {
  const auto csv = temp("runs.csv");
  const auto cov = temp("coverage.csv");
  auto r = run("sweep --host-counts 10 --seeds 1-3 --gamma-m 1,2.5 --gamma-a inf --csv " + csv.string() +
               " --coverage-csv " + cov.string());
  CHECK(r.code == 0);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# ", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("instance,hosts,seed,gamma_m,gamma_a", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);
  CHECK(std::filesystem::exists(cov));

  const auto vjson = temp("variance.json");
  r = run("variance --axis hosts --values 8,12 --seeds 1-3 --out-json " + vjson.string());
  CHECK(r.code == 0);
  std::ifstream vin(vjson);
  const auto v = nlohmann::json::parse(vin);
  CHECK(v["cells"].size() == 2);
  CHECK(run("variance --axis hosts --values 8 --seeds 1").code == 2);
}
