#include "whatif/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "whatif/errors.hpp"

namespace whatif {

Budgets compute_budgets(const MitigationTask& task, const SearchOptions& options) {
  validate(task);
  Budgets out;
  AttackPlanner planner(task.pentest, options.planner);
  out.attack = planner.min_attack_budget(task.initial_network);
  if (out.attack.is_infinite()) return out;
  MitigationTask bounded = with_budgets(task, out.attack, Cost::infinite());
  AttackPlanner bounded_planner(bounded.pentest, options.planner);
  out.p_star = bounded_planner.p_star(bounded.initial_network);
  out.mitigation = min_mitigation_budget(bounded, options);
  return out;
}

double parse_factor(const std::string& text) {
  const Cost c = Cost::parse(text);
  const double v = c.is_infinite() ? std::numeric_limits<double>::infinity() : c.to_double();
  if (!(v >= 1.0)) throw ValidationError("budget factor must be at least 1: '" + text + "'");
  return v;
}

std::string factor_to_string(double factor) {
  if (std::isinf(factor)) return "inf";
  std::ostringstream s;
  s << factor;
  return s.str();
}

Cost scale_budget(Cost base, double factor) { return base.scaled(factor); }

MitigationTask with_budgets(MitigationTask task, Cost attack, Cost mitigation) {
  task.pentest.attacker_budget = attack;
  task.mitigation_budget = mitigation;
  return task;
}

Json cost_to_json(Cost c) {
  if (c.is_infinite()) return "inf";
  return c.to_double();
}

Json plan_to_json(const AttackPlanner& planner, const std::optional<AttackPlan>& plan) {
  Json j;
  j["reachable"] = plan.has_value();
  if (!plan) {
    j["success_probability"] = 0.0;
    j["steps"] = Json::array();
    return j;
  }
  const auto& task = planner.task();
  Json steps = Json::array();
  for (auto s : plan->steps) {
    const auto& d = planner.det_actions()[s];
    const auto& a = task.actions[d.source_action];
    steps.push_back({{"id", d.id},
                     {"action", a.id},
                     {"outcome", a.outcomes[d.outcome_index].name},
                     {"probability", a.outcomes[d.outcome_index].probability},
                     {"cost", cost_to_json(d.budget_cost)}});
  }
  j["success_probability"] = plan->success_probability;
  j["log_cost"] = plan->log_cost;
  j["budget_spent"] = cost_to_json(plan->budget_spent);
  j["steps"] = std::move(steps);
  return j;
}

Json stats_to_json(const SearchStats& s) {
  return {{"nodes_expanded", s.nodes_expanded},
          {"planner_calls", s.planner_calls},
          {"parent_plan_reuses", s.parent_plan_reuses},
          {"cache_hits", s.cache_hits},
          {"c0_prunes", s.c0_prunes},
          {"sleep_skips", s.sleep_skips},
          {"ofix_prunes", s.ofix_prunes},
          {"cycle_prunes", s.cycle_prunes},
          {"budget_cutoffs", s.budget_cutoffs},
          {"ids_iterations", s.ids_iterations},
          {"planner_expansions", s.planner_expansions},
          {"peak_memory_bytes", s.peak_memory_bytes},
          {"wall_seconds", s.wall_seconds}};
}

Json frontier_to_json(const MitigationTask& task, const MitigationResult& result) {
  Json entries = Json::array();
  for (const auto& e : result.frontier) {
    Json ids = Json::array();
    for (auto f : e.strategy.fixes) ids.push_back(task.fixes[f].id);
    entries.push_back({{"cost", cost_to_json(e.cost())}, {"p_star", e.p_star}, {"fixes", std::move(ids)}});
  }
  Json limit = nullptr;
  if (result.limit) limit = *result.limit == ResourceLimitExceeded::Kind::Time ? "time" : "memory";
  return {{"complete", result.complete},
          {"limit", limit},
          {"attack_budget", cost_to_json(task.pentest.attacker_budget)},
          {"mitigation_budget", cost_to_json(task.mitigation_budget)},
          {"initial_p_star", result.initial_p_star},
          {"c_zero", cost_to_json(result.c_zero)},
          {"final_budget", cost_to_json(result.final_budget)},
          {"frontier", std::move(entries)},
          {"stats", stats_to_json(result.stats)}};
}

std::vector<InstanceSpec> generated_instances(const GenParams& base, const std::vector<unsigned>& hosts,
                                              const std::vector<std::uint64_t>& seeds) {
  std::vector<InstanceSpec> out;
  for (auto h : hosts)
    for (auto s : seeds) {
      InstanceSpec spec;
      spec.params = base;
      spec.params.hosts = h;
      spec.params.seed = s;
      spec.id = "h" + std::to_string(h) + "-s" + std::to_string(s);
      out.push_back(std::move(spec));
    }
  return out;
}

void SweepConfig::validate() const {
  if (instances.empty()) throw ValidationError("sweep needs at least one instance");
  if (gamma_m.empty() || gamma_a.empty()) throw ValidationError("sweep needs at least one budget factor per axis");
  for (double g : gamma_m)
    if (!(g >= 1.0)) throw ValidationError("budget factors must be at least 1");
  for (double g : gamma_a)
    if (!(g >= 1.0)) throw ValidationError("budget factors must be at least 1");
  if (!(time_limit_seconds > 0.0) || memory_limit_bytes == 0) throw ValidationError("limits must be positive");
}

namespace {

struct Prepared {
  MitigationTask task;
  unsigned hosts = 0;
  std::uint64_t seed = 0;
  std::optional<Budgets> budgets;
  std::string status;  // empty when runnable
  std::string message;
};

Prepared prepare(const InstanceSpec& spec, const SearchOptions& search) {
  Prepared p;
  try {
    if (spec.model_dir) {
      p.task = load_model_dir(*spec.model_dir);
      const auto docs = read_model_dir(*spec.model_dir);
      for (const auto& s : docs.topology.subnets) p.hosts += static_cast<unsigned>(s.hosts.size());
    } else {
      p.task = generate_task(spec.params).task;
      p.hosts = spec.params.hosts;
      p.seed = spec.params.seed;
    }
    p.budgets = compute_budgets(p.task, search);
    if (p.budgets->attack.is_infinite()) p.status = "unreachable";
  } catch (const ResourceLimitExceeded& e) {
    p.status = "budget-limit";
    p.message = e.what();
  } catch (const std::exception& e) {
    p.status = "error";
    p.message = e.what();
  }
  return p;
}

RunRecord run_cell(const Prepared& p, const std::string& id, double gm, double ga, const SearchOptions& search) {
  RunRecord r;
  r.instance = id;
  r.hosts = p.hosts;
  r.seed = p.seed;
  r.gamma_m = gm;
  r.gamma_a = ga;
  if (!p.status.empty()) {
    r.status = p.status;
    r.message = p.message;
    return r;
  }
  r.attack_budget = scale_budget(p.budgets->attack, ga);
  r.mitigation_budget = scale_budget(p.budgets->mitigation, gm);
  try {
    const auto task = with_budgets(p.task, r.attack_budget, r.mitigation_budget);
    const auto result = pareto_frontier(task, search);
    r.solved = result.complete;
    r.status = result.complete ? "solved"
               : *result.limit == ResourceLimitExceeded::Kind::Time ? "time-limit"
                                                                     : "memory-limit";
    r.wall_seconds = result.stats.wall_seconds;
    r.peak_memory_bytes = result.stats.peak_memory_bytes;
    r.frontier_size = result.frontier.size();
    r.nodes_expanded = result.stats.nodes_expanded;
    r.planner_calls = result.stats.planner_calls;
  } catch (const std::exception& e) {
    r.status = "error";
    r.message = e.what();
  }
  return r;
}

int thread_count(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

SearchOptions limited(SearchOptions search, double seconds, std::size_t bytes) {
  search.time_limit_seconds = seconds;
  search.memory_limit_bytes = bytes;
  return search;
}

}  // namespace

std::vector<RunRecord> run_sweep(const SweepConfig& config) {
  config.validate();
  const auto search = limited(config.search, config.time_limit_seconds, config.memory_limit_bytes);
  const int threads = thread_count(config.threads);
  const long n = static_cast<long>(config.instances.size());

  std::vector<Prepared> prepared(config.instances.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) prepared[i] = prepare(config.instances[i], search);

  const long gm = static_cast<long>(config.gamma_m.size());
  const long ga = static_cast<long>(config.gamma_a.size());
  const long cells = n * gm * ga;
  std::vector<RunRecord> out(static_cast<std::size_t>(cells));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long c = 0; c < cells; ++c) {
    const long i = c / (gm * ga);
    const long m = (c / ga) % gm;
    const long a = c % ga;
    out[c] = run_cell(prepared[i], config.instances[i].id, config.gamma_m[m], config.gamma_a[a], search);
  }
  return out;
}

std::vector<CoverageCell> coverage(const std::vector<RunRecord>& records) {
  std::map<std::tuple<unsigned, double, double>, CoverageCell> cells;
  for (const auto& r : records) {
    auto& cell = cells[{r.hosts, r.gamma_m, r.gamma_a}];
    cell.hosts = r.hosts;
    cell.gamma_m = r.gamma_m;
    cell.gamma_a = r.gamma_a;
    if (r.status == "unreachable") continue;
    ++cell.total;
    if (r.solved) ++cell.solved;
  }
  std::vector<CoverageCell> out;
  for (auto& [key, cell] : cells) out.push_back(cell);
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

void write_header(std::ostream& out, const std::string& provenance, const std::vector<std::string>& columns) {
  out << "# " << provenance << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
}

}  // namespace

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records, const std::string& provenance) {
  write_header(out, provenance, run_csv_columns());
  for (const auto& r : records) {
    out << csv_field(r.instance) << ',' << r.hosts << ',' << r.seed << ',' << factor_to_string(r.gamma_m) << ','
        << factor_to_string(r.gamma_a) << ',' << r.attack_budget.to_string() << ','
        << r.mitigation_budget.to_string() << ',' << r.status << ',' << (r.solved ? 1 : 0) << ','
        << number(r.wall_seconds) << ',' << r.peak_memory_bytes << ',' << r.frontier_size << ','
        << r.nodes_expanded << ',' << r.planner_calls << "\n";
  }
}

void write_coverage_csv(std::ostream& out, const std::vector<CoverageCell>& cells, const std::string& provenance) {
  write_header(out, provenance, {"hosts", "gamma_m", "gamma_a", "solved", "total", "coverage_percent"});
  for (const auto& c : cells)
    out << c.hosts << ',' << factor_to_string(c.gamma_m) << ',' << factor_to_string(c.gamma_a) << ',' << c.solved
        << ',' << c.total << ',' << number(c.percent()) << "\n";
}

Json to_json(const RunRecord& r) {
  return {{"instance", r.instance},
          {"hosts", r.hosts},
          {"seed", r.seed},
          {"gamma_m", factor_to_string(r.gamma_m)},
          {"gamma_a", factor_to_string(r.gamma_a)},
          {"attack_budget", cost_to_json(r.attack_budget)},
          {"mitigation_budget", cost_to_json(r.mitigation_budget)},
          {"status", r.status},
          {"solved", r.solved},
          {"wall_seconds", r.wall_seconds},
          {"peak_memory_bytes", r.peak_memory_bytes},
          {"frontier_size", r.frontier_size},
          {"nodes_expanded", r.nodes_expanded},
          {"planner_calls", r.planner_calls},
          {"message", r.message}};
}

Json to_json(const CoverageCell& c) {
  return {{"hosts", c.hosts},
          {"gamma_m", factor_to_string(c.gamma_m)},
          {"gamma_a", factor_to_string(c.gamma_a)},
          {"solved", c.solved},
          {"total", c.total},
          {"coverage_percent", c.percent()}};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw ValidationError("summary of an empty sample");
  std::sort(values.begin(), values.end());
  Summary s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

std::string to_string(VarianceAxis axis) { return axis == VarianceAxis::Hosts ? "hosts" : "fixes_per_host"; }

void VarianceConfig::validate() const {
  if (values.empty()) throw ValidationError("variance report needs at least one x value");
  if (seeds.size() < 2) throw ValidationError("variance report needs at least two seeds");
  if (instances_per_seed == 0) throw ValidationError("instances per seed must be positive");
  if (!(gamma_m >= 1.0) || !(gamma_a >= 1.0)) throw ValidationError("budget factors must be at least 1");
  if (!(time_limit_seconds > 0.0) || memory_limit_bytes == 0) throw ValidationError("limits must be positive");
}

VarianceReport run_variance(const VarianceConfig& config) {
  config.validate();
  SweepConfig sweep;
  sweep.gamma_m = {config.gamma_m};
  sweep.gamma_a = {config.gamma_a};
  sweep.time_limit_seconds = config.time_limit_seconds;
  sweep.memory_limit_bytes = config.memory_limit_bytes;
  sweep.search = config.search;
  sweep.threads = config.threads;
  const unsigned k = config.instances_per_seed;
  for (double x : config.values)
    for (auto seed : config.seeds)
      for (unsigned j = 0; j < k; ++j) {
        InstanceSpec spec;
        spec.params = config.base;
        if (config.axis == VarianceAxis::Hosts) spec.params.hosts = static_cast<unsigned>(std::lround(x));
        else spec.params.lambda_f = x;
        spec.params.seed = seed * k + j;
        spec.id = to_string(config.axis) + "=" + factor_to_string(x) + "-s" + std::to_string(seed) + "-" +
                  std::to_string(j);
        sweep.instances.push_back(std::move(spec));
      }

  VarianceReport report;
  report.axis = config.axis;
  report.runs = run_sweep(sweep);

  std::size_t at = 0;
  for (double x : config.values) {
    VarianceCell cell;
    cell.x = x;
    cell.seeds = config.seeds;
    VarianceMetric cov{"coverage_percent", {}, {}}, nodes{"nodes_expanded", {}, {}},
        wall{"wall_seconds", {}, {}}, size{"frontier_size", {}, {}};
    for (std::size_t s = 0; s < config.seeds.size(); ++s) {
      double solved = 0, total = 0, n = 0, w = 0, f = 0;
      for (unsigned j = 0; j < k; ++j, ++at) {
        const auto& r = report.runs[at];
        if (r.status == "unreachable") continue;
        total += 1;
        solved += r.solved ? 1 : 0;
        n += static_cast<double>(r.nodes_expanded);
        w += r.wall_seconds;
        f += static_cast<double>(r.frontier_size);
      }
      const double d = std::max(total, 1.0);
      cov.values.push_back(total > 0 ? 100.0 * solved / total : 0.0);
      nodes.values.push_back(n / d);
      wall.values.push_back(w / d);
      size.values.push_back(f / d);
    }
    for (auto* m : {&cov, &nodes, &wall, &size}) {
      m->summary = summarize(m->values);
      cell.metrics.push_back(std::move(*m));
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

namespace {

Json summary_json(const Summary& s) {
  return {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}, {"mean", s.mean}};
}

}  // namespace

Json to_json(const VarianceReport& report) {
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    Json metrics = Json::object();
    for (const auto& m : c.metrics) metrics[m.name] = {{"values", m.values}, {"summary", summary_json(m.summary)}};
    cells.push_back({{"x", c.x}, {"seeds", c.seeds}, {"metrics", std::move(metrics)}});
  }
  Json runs = Json::array();
  for (const auto& r : report.runs) runs.push_back(to_json(r));
  return {{"axis", to_string(report.axis)}, {"cells", std::move(cells)}, {"runs", std::move(runs)}};
}

void write_variance_csv(std::ostream& out, const VarianceReport& report, const std::string& provenance) {
  write_header(out, provenance, {to_string(report.axis), "metric", "seed", "value"});
  for (const auto& c : report.cells)
    for (const auto& m : c.metrics) {
      for (std::size_t i = 0; i < m.values.size(); ++i)
        out << number(c.x) << ',' << m.name << ',' << c.seeds[i] << ',' << number(m.values[i]) << "\n";
      const auto& s = m.summary;
      for (const auto& [label, v] : std::vector<std::pair<const char*, double>>{
               {"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}, {"mean", s.mean}})
        out << number(c.x) << ',' << m.name << ',' << label << ',' << number(v) << "\n";
    }
}

}  // namespace whatif
