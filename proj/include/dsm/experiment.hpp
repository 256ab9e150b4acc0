#pragma once

// Experiment orchestration behind the dsmsim commands: run configuration,
// per-day evaluation of the billing mechanisms, and the results files.
//
// Run configuration (JSON; relative paths are taken from the config's
// directory). Exactly one day source:
//   "scenarios": ["day1.json", ...]
//   "history": "history.csv", "calendar": "calendar.csv", "days": [dates]
//       (days optional: every calendar date), with optional "cost_model"
//       ({a2, a1, a0} of the total load; default 0.04, 8, 0.1), "peak" and
//       "baseline_price" as in scenario files
//   "synthetic": {generator fields}, generated in memory
// Optional: "mechanisms", "seed", "solver" {tolerance, max_iterations,
// step_rule}, "brd" {order, epsilon, max_rounds}, "sweep" {factors, day},
// "load_cap" (24 values).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsm/billing.hpp"
#include "dsm/dynamics.hpp"
#include "dsm/metrics.hpp"
#include "dsm/model.hpp"
#include "dsm/qpsolve.hpp"
#include "dsm/synthetic.hpp"

namespace dsm {

struct RunConfig {
  std::vector<std::filesystem::path> scenario_paths;
  std::optional<std::filesystem::path> history_path;
  std::optional<std::filesystem::path> calendar_path;
  std::vector<std::string> days;
  CostModel base_cost = default_base_cost();
  Scenario tariff;  // peak hours, prices
  std::optional<SyntheticSpec> synthetic;

  std::vector<Mechanism> mechanisms{Mechanism::DP, Mechanism::HP, Mechanism::Baseline, Mechanism::PeakOff};
  std::uint64_t seed = 0;
  SolveSettings solve;
  BrdSettings brd;
  std::vector<double> sweep_factors{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::string sweep_day;  // empty: first day
  std::optional<HourVector> load_cap;
  bool trace = false;

  /// Compact description of the solver and BRD settings, written on every
  /// results row.
  std::string settings_text() const;
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Loads (or generates) and validates the day set. Throws InvalidInputError
/// naming the day and the violated constraint.
std::vector<Scenario> load_days(const RunConfig& config);

/// Seed used for day number `index` (random player order, off-peak shift).
std::uint64_t day_seed(std::uint64_t seed, std::size_t index);

struct MechanismRun {
  MetricsReport metrics;
  LoadProfile profile;       // equilibrium or reference profile
  bool converged = true;     // BRD mechanisms only
  int rounds = 0;
  int best_responses = 0;
  std::optional<bool> unique;  // HP: uniqueness condition at the equilibrium
  std::vector<TraceRecord> trace;
};

struct DayResult {
  std::string day_id;
  std::uint64_t seed = 0;
  std::vector<std::string> consumer_ids;
  HourVector nonflexible;    // aggregate
  Externalities externalities;
  std::vector<MechanismRun> runs;  // in config order
};

/// Externalities are computed once and shared by all mechanisms. Errors are
/// rethrown with day and mechanism context.
DayResult evaluate_day(const Scenario& s, const RunConfig& config, std::uint64_t seed);

struct SummaryRow {
  Mechanism mechanism = Mechanism::DP;
  std::size_t days = 0;
  MeanStd poa_minus_1_pct;
  MeanStd fairness_pct;
  double best_responses_per_consumer = 0.0;  // NaN for non-BRD mechanisms
};

struct SimulationResult {
  std::vector<DayResult> days;
  std::vector<SummaryRow> summary;
};

SimulationResult simulate(const std::vector<Scenario>& days, const RunConfig& config);
std::vector<SummaryRow> summarize(const std::vector<DayResult>& days, std::span<const Mechanism> mechanisms);

/// Writes metrics.csv, bills.csv, summary.csv and, with trace on, trace.csv,
/// then the plot data (see export_plot_data).
void write_results(const SimulationResult& result, const RunConfig& config, const std::filesystem::path& out_dir);

/// loads.csv: day_id,mechanism,hour,nonflexible,flexible,total (num_hours
/// rows per day and mechanism); scatter.csv: day_id,mechanism,poa_minus_1,
/// fairness_index (one row per day and mechanism).
void export_plot_data(const SimulationResult& result, const RunConfig& config, const std::filesystem::path& out_dir);

/// sweep.csv: factor,mechanism,feasible,fairness_index,poa,diagnostic.
void write_sweep(const SweepResult& sweep, const RunConfig& config, const std::string& day_id,
                 const std::filesystem::path& out_dir);

/// Mean (std) of PoA-1 and F in percent per mechanism, as a text table.
std::string format_summary(std::span<const SummaryRow> rows);

/// history.csv, calendar.csv, scenarios/<date>.json, generation_summary.csv
/// and a simulate.json config pointing at the scenarios.
void write_synthetic(const SyntheticData& data, const SyntheticSpec& spec, const std::filesystem::path& out_dir);

SyntheticSpec parse_synthetic_spec(std::string_view json_text);

}  // namespace dsm
