#pragma once

// Experiment harness: budget resolution, budget-scaling sweeps with coverage
// tables, multi-seed variance reports, and JSON / CSV serialisation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "whatif/acquisition.hpp"
#include "whatif/mitigation.hpp"
#include "whatif/scenario.hpp"

namespace whatif {

struct Budgets {
  Cost attack = Cost::infinite();      ///< minimal attacker budget for p* > 0
  Cost mitigation = Cost::infinite();  ///< minimal cost lowering p* at that attacker budget
  double p_star = 0.0;                 ///< p* of the initial network at the minimal attacker budget
};

/// Minimal attacker budget, then the minimal mitigation budget under it.
/// An unreachable goal leaves both infinite.
Budgets compute_budgets(const MitigationTask& task, const SearchOptions& options = {});

/// Parses a budget factor: a number >= 1, or "inf".
double parse_factor(const std::string& text);
std::string factor_to_string(double factor);

/// base * factor; an infinite factor or base gives an unlimited budget.
Cost scale_budget(Cost base, double factor);

MitigationTask with_budgets(MitigationTask task, Cost attack, Cost mitigation);

Json plan_to_json(const AttackPlanner& planner, const std::optional<AttackPlan>& plan);
Json frontier_to_json(const MitigationTask& task, const MitigationResult& result);
Json stats_to_json(const SearchStats& stats);
/// Finite costs as numbers, infinity as the string "inf".
Json cost_to_json(Cost c);

/// One benchmark instance: a model directory or generator parameters.
struct InstanceSpec {
  std::string id;
  std::optional<std::filesystem::path> model_dir;
  GenParams params;
};

std::vector<InstanceSpec> generated_instances(const GenParams& base, const std::vector<unsigned>& hosts,
                                              const std::vector<std::uint64_t>& seeds);

struct SweepConfig {
  std::vector<InstanceSpec> instances;
  std::vector<double> gamma_m{1.0, 2.5, 5.0, 7.5, 10.0, std::numeric_limits<double>::infinity()};
  std::vector<double> gamma_a{1.0, 2.5, 5.0, 7.5, 10.0, std::numeric_limits<double>::infinity()};
  double time_limit_seconds = 1800.0;
  std::size_t memory_limit_bytes = std::size_t{4} << 30;
  SearchOptions search;
  /// Worker threads for independent cells; 0 uses the OpenMP default.
  int threads = 0;

  void validate() const;
};

struct RunRecord {
  std::string instance;
  unsigned hosts = 0;
  std::uint64_t seed = 0;
  double gamma_m = 1.0;
  double gamma_a = 1.0;
  Cost attack_budget = Cost::infinite();
  Cost mitigation_budget = Cost::infinite();
  /// solved, time-limit, memory-limit, unreachable, budget-limit, error
  std::string status;
  bool solved = false;
  double wall_seconds = 0.0;
  std::size_t peak_memory_bytes = 0;
  std::size_t frontier_size = 0;
  std::size_t nodes_expanded = 0;
  std::size_t planner_calls = 0;
  std::string message;
};

/// Runs every (instance, gamma_m, gamma_a) cell. Instances whose goal is
/// unreachable yield "unreachable" rows and are not run. Records come back
/// in instance, gamma_m, gamma_a order regardless of thread count.
std::vector<RunRecord> run_sweep(const SweepConfig& config);

struct CoverageCell {
  unsigned hosts = 0;
  double gamma_m = 1.0;
  double gamma_a = 1.0;
  std::size_t solved = 0;
  std::size_t total = 0;  ///< runs excluding unreachable instances

  double percent() const { return total ? 100.0 * static_cast<double>(solved) / static_cast<double>(total) : 0.0; }
};

std::vector<CoverageCell> coverage(const std::vector<RunRecord>& records);

inline const std::vector<std::string>& run_csv_columns() {
  static const std::vector<std::string> columns{
      "instance",      "hosts",  "seed",         "gamma_m",           "gamma_a",
      "attack_budget", "mitigation_budget", "status", "solved",     "wall_seconds",
      "peak_memory_bytes", "frontier_size", "nodes_expanded", "planner_calls"};
  return columns;
}

/// CSV with a leading "# " provenance line, then the header row.
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records, const std::string& provenance);
void write_coverage_csv(std::ostream& out, const std::vector<CoverageCell>& cells, const std::string& provenance);
Json to_json(const RunRecord& record);
Json to_json(const CoverageCell& cell);

struct Summary {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

/// Order statistics with linear interpolation between closest ranks.
Summary summarize(std::vector<double> values);
double quantile(std::vector<double> values, double q);

enum class VarianceAxis { Hosts, FixesPerHost };

struct VarianceConfig {
  VarianceAxis axis = VarianceAxis::Hosts;
  std::vector<double> values{40, 80, 120};
  std::vector<std::uint64_t> seeds;
  /// Instances generated per (cell, seed); coverage is taken over them.
  unsigned instances_per_seed = 1;
  GenParams base;
  double gamma_m = 2.5;
  double gamma_a = 2.5;
  double time_limit_seconds = 60.0;
  std::size_t memory_limit_bytes = std::size_t{512} << 20;
  SearchOptions search;
  int threads = 0;

  void validate() const;
};

struct VarianceMetric {
  std::string name;
  std::vector<double> values;  ///< one per seed, in seed order
  Summary summary;
};

struct VarianceCell {
  double x = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<VarianceMetric> metrics;  ///< coverage, nodes_expanded, wall_seconds, frontier_size
};

struct VarianceReport {
  VarianceAxis axis = VarianceAxis::Hosts;
  std::vector<VarianceCell> cells;
  std::vector<RunRecord> runs;
};

VarianceReport run_variance(const VarianceConfig& config);
Json to_json(const VarianceReport& report);
/// Long format: x, metric, seed, value; aggregates as seed "min", "q1", ...
void write_variance_csv(std::ostream& out, const VarianceReport& report, const std::string& provenance);

std::string to_string(VarianceAxis axis);

}  // namespace whatif
