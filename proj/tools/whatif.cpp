// whatif: critical attack paths and mitigation frontiers from the command line.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "whatif/harness.hpp"

using namespace whatif;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitUnreachable = 3;
constexpr int kExitLimit = 4;
constexpr const char* kVersion = "1.0.0";

struct Globals {
  std::uint64_t seed = 1;
  double time_limit = 0.0;  // 0: none
  std::string mem_limit;    // empty: none
  bool json = false;
  bool no_sss = false, no_sleep = false, no_ofix = false, no_oatt = false, no_c0 = false;
  bool no_heuristic = false;
  double gamma = 2.0;
};

std::size_t parse_bytes(const std::string& text) {
  if (text.empty()) throw ValidationError("empty memory size");
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ValidationError("not a memory size: '" + text + "'");
  }
  std::string unit = text.substr(pos);
  for (auto& c : unit) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  double mult = 1;
  if (unit == "" || unit == "B") mult = 1;
  else if (unit == "K" || unit == "KIB" || unit == "KB") mult = 1024.0;
  else if (unit == "M" || unit == "MIB" || unit == "MB") mult = 1024.0 * 1024;
  else if (unit == "G" || unit == "GIB" || unit == "GB") mult = 1024.0 * 1024 * 1024;
  else throw ValidationError("unknown memory unit in '" + text + "'");
  if (!(v > 0)) throw ValidationError("memory size must be positive");
  return static_cast<std::size_t>(v * mult);
}

// "1,4,9" or "1-25" or a mix.
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const auto dash = item.find('-', 1);
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dash)), hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw ValidationError("empty seed range '" + item + "'");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("not a seed list: '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError("empty seed list");
  return out;
}

std::vector<double> parse_factors(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) out.push_back(parse_factor(s));
  return out;
}

SearchOptions search_options(const Globals& g) {
  SearchOptions o;
  o.gamma = g.gamma;
  o.use_sss = !g.no_sss;
  o.use_sleep_sets = !g.no_sleep;
  o.use_ofix = !g.no_ofix;
  o.use_oatt = !g.no_oatt;
  o.use_c0 = !g.no_c0;
  o.planner.use_heuristic = !g.no_heuristic;
  if (g.time_limit > 0) o.time_limit_seconds = g.time_limit;
  if (!g.mem_limit.empty()) o.memory_limit_bytes = parse_bytes(g.mem_limit);
  return o;
}

MitigationTask load_task(const std::string& dir) {
  std::vector<std::string> warnings;
  auto task = load_model_dir(dir, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return task;
}

Cost parse_budget(const std::string& text) {
  const Cost c = Cost::parse(text);
  if (c < Cost::zero()) throw ValidationError("budget must be nonnegative");
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError(path + ": cannot write file");
  out << text;
}

std::string provenance_line(const std::string& command, const Globals& g) {
  std::ostringstream s;
  s << "whatif " << kVersion << " " << command << " rng=" << ScenarioRng::kName << " gamma=" << g.gamma
    << " sss=" << !g.no_sss << " sleep=" << !g.no_sleep << " ofix=" << !g.no_ofix << " oatt=" << !g.no_oatt
    << " c0=" << !g.no_c0;
  return s.str();
}

void add_generator_options(CLI::App* cmd, GenParams& p) {
  cmd->add_option("--hosts", p.hosts, "Host count (at least 3)")->capture_default_str();
  cmd->add_option("--alpha-h", p.alpha_h, "Concentration of the host-configuration process")->capture_default_str();
  cmd->add_option("--alpha-v", p.alpha_v, "Concentration of the vulnerability process")->capture_default_str();
  cmd->add_option("--lambda-v", p.lambda_v, "Mean vulnerabilities per configuration")->capture_default_str();
  cmd->add_option("--lambda-f", p.lambda_f, "Mean patches per configuration")->capture_default_str();
  cmd->add_option("--branching", p.user_branching, "User subnet tree branching factor")->capture_default_str();
  cmd->add_option("--subnet-size", p.user_subnet_capacity, "Hosts per user subnet")->capture_default_str();
  cmd->add_option("--open-ports", p.open_port_fraction, "Share of ports open between zones")->capture_default_str();
  cmd->add_option("--protected-ports", p.protected_port_fraction, "Share of DMZ/sensitive ports firewalls may not close")
      ->capture_default_str();
  cmd->add_option("--firewall-cost", p.firewall_cost, "Cost of a firewall fix")->capture_default_str();
}

void print_frontier_text(const MitigationTask& task, const MitigationResult& r) {
  std::cout << "initial p*: " << r.initial_p_star << "\n";
  std::cout << (r.complete ? "frontier (complete):" : "frontier (INCOMPLETE, resource limit hit):") << "\n";
  for (const auto& e : r.frontier) {
    std::cout << "  cost " << e.cost().to_string() << "  p* " << e.p_star << "  [";
    for (std::size_t i = 0; i < e.strategy.fixes.size(); ++i)
      std::cout << (i ? ", " : "") << task.fixes[e.strategy.fixes[i]].id;
    std::cout << "]\n";
  }
  std::cout << "nodes expanded " << r.stats.nodes_expanded << ", planner calls " << r.stats.planner_calls
            << ", cache hits " << r.stats.cache_hits << ", wall " << r.stats.wall_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical attack paths and Pareto frontiers of mitigation strategies"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--time-limit", g.time_limit, "Wall-clock limit in seconds (0: none)")->capture_default_str();
  app.add_option("--mem-limit", g.mem_limit, "Memory limit, e.g. 512M or 4G");
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_flag("--no-sss", g.no_sss, "Disable strong stubborn sets");
  app.add_flag("--no-sleep-sets", g.no_sleep, "Disable sleep sets");
  app.add_flag("--no-ofix", g.no_ofix, "Disable the cheapest-sequence cache");
  app.add_flag("--no-oatt", g.no_oatt, "Disable attack plan reuse and caching");
  app.add_flag("--no-c0", g.no_c0, "Disable pruning above the cheapest zero-probability strategy");
  app.add_flag("--no-heuristic", g.no_heuristic, "Plain uniform-cost attack planning");
  app.add_option("--ids-growth", g.gamma, "Growth factor of the deepening mitigation budget")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic network model");
  GenParams gen_params;
  std::string gen_out;
  add_generator_options(gen, gen_params);
  gen->add_option("-o,--out", gen_out, "Output directory")->required();

  // plan
  auto* plan = app.add_subcommand("plan", "Compute a critical attack path");
  std::string plan_dir, plan_budget = "inf";
  plan->add_option("model", plan_dir, "Model directory")->required();
  plan->add_option("--budget", plan_budget, "Attacker budget")->capture_default_str();

  // mitigate
  auto* mit = app.add_subcommand("mitigate", "Compute the Pareto frontier of mitigation strategies");
  std::string mit_dir, mit_attack = "inf", mit_mitigation = "inf", mit_out;
  mit->add_option("model", mit_dir, "Model directory")->required();
  mit->add_option("--attack-budget", mit_attack, "Attacker budget")->capture_default_str();
  mit->add_option("--mitigation-budget", mit_mitigation, "Mitigation budget")->capture_default_str();
  mit->add_option("-o,--out", mit_out, "Write frontier JSON to a file");

  // budgets
  auto* bud = app.add_subcommand("budgets", "Minimal attacker and mitigation budgets");
  std::string bud_dir;
  bud->add_option("model", bud_dir, "Model directory")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Budget-scaling sweep with coverage table");
  std::vector<unsigned> sweep_hosts{40, 80, 120};
  std::string sweep_seeds = "1-5";
  std::vector<std::string> sweep_gm{"1", "2.5", "5", "7.5", "10", "inf"};
  std::vector<std::string> sweep_ga{"1", "2.5", "5", "7.5", "10", "inf"};
  std::vector<std::string> sweep_models;
  std::string sweep_csv, sweep_cov, sweep_json;
  int sweep_threads = 0;
  GenParams sweep_params;
  add_generator_options(sweep, sweep_params);
  sweep->add_option("--host-counts", sweep_hosts, "Generated instance sizes")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "Seeds, e.g. 1-25 or 1,3,5")->capture_default_str();
  sweep->add_option("--gamma-m", sweep_gm, "Mitigation budget factors")->delimiter(',')->capture_default_str();
  sweep->add_option("--gamma-a", sweep_ga, "Attacker budget factors")->delimiter(',')->capture_default_str();
  sweep->add_option("--model", sweep_models, "Model directories instead of generated instances");
  sweep->add_option("--csv", sweep_csv, "Run records CSV (default: stdout)");
  sweep->add_option("--coverage-csv", sweep_cov, "Coverage table CSV");
  sweep->add_option("--out-json", sweep_json, "Runs and coverage as JSON");
  sweep->add_option("--threads", sweep_threads, "Worker threads (0: all)")->capture_default_str();

  // variance
  auto* var = app.add_subcommand("variance", "Per-seed distribution report");
  std::string var_axis = "hosts", var_seeds = "1-10", var_csv, var_json;
  std::vector<double> var_values{40, 80, 120};
  std::string var_gm = "2.5", var_ga = "2.5";
  unsigned var_k = 1;
  int var_threads = 0;
  GenParams var_params;
  add_generator_options(var, var_params);
  var->add_option("--axis", var_axis, "hosts or fixes-per-host")
      ->check(CLI::IsMember({"hosts", "fixes-per-host"}))
      ->capture_default_str();
  var->add_option("--values", var_values, "x-axis values")->delimiter(',')->capture_default_str();
  var->add_option("--seeds", var_seeds, "Seeds, e.g. 1-10")->capture_default_str();
  var->add_option("--instances-per-seed", var_k, "Instances per seed and cell")->capture_default_str();
  var->add_option("--gamma-m", var_gm, "Mitigation budget factor")->capture_default_str();
  var->add_option("--gamma-a", var_ga, "Attacker budget factor")->capture_default_str();
  var->add_option("--csv", var_csv, "Long-format CSV (default: stdout)");
  var->add_option("--out-json", var_json, "Report as JSON");
  var->add_option("--threads", var_threads, "Worker threads (0: all)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const auto opts = search_options(g);

    if (*gen) {
      gen_params.seed = g.seed;
      auto scenario = generate_task(gen_params);
      write_scenario(scenario, gen_out);
      if (g.json) {
        std::cout << Json{{"out", gen_out},
                          {"attacker_actions", scenario.task.pentest.actions.size()},
                          {"fixes", scenario.task.fixes.size()},
                          {"provenance", scenario.provenance}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << "wrote " << gen_out << ": " << scenario.task.pentest.actions.size() << " attacker actions, "
                  << scenario.task.fixes.size() << " fixes\n";
      }
      return kExitOk;
    }

    if (*plan) {
      auto task = load_task(plan_dir);
      task.pentest.attacker_budget = parse_budget(plan_budget);
      AttackPlanner planner(task.pentest, opts.planner);
      ResourceGuard guard(opts.time_limit_seconds, opts.memory_limit_bytes);
      planner.set_guard(&guard);
      const auto result = planner.critical_attack_path(task.initial_network);
      if (g.json) {
        std::cout << plan_to_json(planner, result).dump(2) << "\n";
      } else if (result) {
        std::cout << "p* = " << result->success_probability << ", budget spent " << result->budget_spent.to_string()
                  << ", " << result->steps.size() << " steps\n";
        for (auto s : result->steps) std::cout << "  " << planner.det_actions()[s].id << "\n";
      } else {
        std::cout << "goal unreachable within budget " << task.pentest.attacker_budget.to_string() << "\n";
      }
      return result ? kExitOk : kExitUnreachable;
    }

    if (*mit) {
      auto task = with_budgets(load_task(mit_dir), parse_budget(mit_attack), parse_budget(mit_mitigation));
      const auto result = pareto_frontier(task, opts);
      const auto j = frontier_to_json(task, result);
      if (!mit_out.empty()) write_text(mit_out, j.dump(2) + "\n");
      if (g.json) std::cout << j.dump(2) << "\n";
      else print_frontier_text(task, result);
      if (!result.complete) return kExitLimit;
      return result.initial_p_star > 0.0 ? kExitOk : kExitUnreachable;
    }

    if (*bud) {
      const auto task = load_task(bud_dir);
      const auto b = compute_budgets(task, opts);
      if (g.json) {
        std::cout << Json{{"attack_budget", cost_to_json(b.attack)},
                          {"mitigation_budget", cost_to_json(b.mitigation)},
                          {"p_star", b.p_star}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << "minimal attacker budget: " << b.attack.to_string() << "\n"
                  << "minimal mitigation budget: " << b.mitigation.to_string() << "\n"
                  << "p* at minimal attacker budget: " << b.p_star << "\n";
      }
      return b.attack.is_infinite() ? kExitUnreachable : kExitOk;
    }

    if (*sweep) {
      SweepConfig cfg;
      cfg.gamma_m = parse_factors(sweep_gm);
      cfg.gamma_a = parse_factors(sweep_ga);
      cfg.search = opts;
      cfg.threads = sweep_threads;
      if (opts.time_limit_seconds) cfg.time_limit_seconds = *opts.time_limit_seconds;
      if (opts.memory_limit_bytes) cfg.memory_limit_bytes = *opts.memory_limit_bytes;
      if (!sweep_models.empty()) {
        for (const auto& m : sweep_models) cfg.instances.push_back({m, std::filesystem::path(m), {}});
      } else {
        cfg.instances = generated_instances(sweep_params, sweep_hosts, parse_seed_list(sweep_seeds));
      }
      const auto records = run_sweep(cfg);
      const auto cells = coverage(records);
      const auto prov = provenance_line("sweep", g);
      std::ostringstream csv;
      write_runs_csv(csv, records, prov);
      write_text(sweep_csv, csv.str());
      if (!sweep_cov.empty()) {
        std::ostringstream cov;
        write_coverage_csv(cov, cells, prov);
        write_text(sweep_cov, cov.str());
      }
      if (!sweep_json.empty()) {
        Json runs = Json::array(), cov = Json::array();
        for (const auto& r : records) runs.push_back(to_json(r));
        for (const auto& c : cells) cov.push_back(to_json(c));
        write_text(sweep_json, Json{{"provenance", prov}, {"runs", runs}, {"coverage", cov}}.dump(2) + "\n");
      }
      return kExitOk;
    }

    if (*var) {
      VarianceConfig cfg;
      cfg.axis = var_axis == "hosts" ? VarianceAxis::Hosts : VarianceAxis::FixesPerHost;
      cfg.values = var_values;
      cfg.seeds = parse_seed_list(var_seeds);
      cfg.instances_per_seed = var_k;
      cfg.base = var_params;
      cfg.gamma_m = parse_factor(var_gm);
      cfg.gamma_a = parse_factor(var_ga);
      cfg.search = opts;
      cfg.threads = var_threads;
      if (opts.time_limit_seconds) cfg.time_limit_seconds = *opts.time_limit_seconds;
      if (opts.memory_limit_bytes) cfg.memory_limit_bytes = *opts.memory_limit_bytes;
      const auto report = run_variance(cfg);
      const auto prov = provenance_line("variance", g);
      std::ostringstream csv;
      write_variance_csv(csv, report, prov);
      write_text(var_csv, csv.str());
      if (!var_json.empty()) {
        auto j = to_json(report);
        j["provenance"] = prov;
        write_text(var_json, j.dump(2) + "\n");
      }
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ResourceLimitExceeded& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitLimit;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
