// dsmsim: run the billing-mechanism experiments from the command line.
//
//   dsmsim simulate <config> --out <dir> [--seed N] [--trace]
//   dsmsim compare  <config> --out <dir> [--seed N] [--trace]
//   dsmsim sweep    <config> --out <dir> [--seed N]
//   dsmsim generate <spec>   --out <dir> [--seed N]

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dsm/experiment.hpp"
#include "dsm/scenario_io.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool trace = false;
};

CLI::App* add_command(CLI::App& app, const char* name, const char* help, Options& opt, bool with_trace) {
  auto* cmd = app.add_subcommand(name, help);
  cmd->add_option("config", opt.config, "configuration file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out, "output directory")->required();
  cmd->add_option("--seed", opt.seed, "base seed (overrides the file)");
  if (with_trace) cmd->add_flag("--trace", opt.trace, "write per-best-response trace records");
  return cmd;
}

dsm::RunConfig run_config(const Options& opt) {
  auto config = dsm::load_run_config(opt.config);
  if (opt.seed) config.seed = *opt.seed;
  config.trace = opt.trace;
  return config;
}

int run_simulation(dsm::RunConfig config, const Options& opt) {
  const auto days = dsm::load_days(config);
  const auto result = dsm::simulate(days, config);
  dsm::write_results(result, config, opt.out);
  for (const auto& d : result.days) {
    for (const auto& run : d.runs) {
      if (!run.converged) {
        fmt::print(stderr, "warning: day {}, {}: best response dynamics stopped after {} rounds without converging\n",
                   d.day_id, dsm::to_string(run.metrics.mechanism), run.rounds);
      }
      if (run.unique && !*run.unique) {
        fmt::print(stderr, "warning: day {}, HP: uniqueness condition fails; PoA is a lower estimate\n", d.day_id);
      }
    }
  }
  fmt::print("{}", dsm::format_summary(result.summary));
  fmt::print("results written to {}\n", opt.out);
  return 0;
}

int run_sweep(const Options& opt) {
  auto config = run_config(opt);
  const auto days = dsm::load_days(config);
  std::size_t index = 0;
  if (!config.sweep_day.empty()) {
    while (index < days.size() && days[index].day_id != config.sweep_day) ++index;
    if (index == days.size()) throw dsm::InvalidInputError(fmt::format("sweep day {} not in the day set", config.sweep_day));
  }
  std::vector<dsm::Mechanism> mechanisms;
  for (auto m : config.mechanisms) {
    if (m == dsm::Mechanism::DP || m == dsm::Mechanism::HP) mechanisms.push_back(m);
  }
  if (mechanisms.empty()) mechanisms = {dsm::Mechanism::DP, dsm::Mechanism::HP};
  auto brd = config.brd;
  brd.seed = dsm::day_seed(config.seed, index);
  const auto sweep = dsm::constraint_scaling_sweep(days[index], config.sweep_factors, mechanisms, config.solve, brd);
  dsm::write_sweep(sweep, config, days[index].day_id, opt.out);

  fmt::print("{:>8} {:>10} {:>14} {:>14}\n", "factor", "mechanism", "F %", "PoA-1 %");
  for (const auto& e : sweep.entries) {
    if (e.feasible) {
      fmt::print("{:>8} {:>10} {:>14.4f} {:>14.6f}\n", e.factor, dsm::to_string(e.mechanism), 100.0 * e.fairness_index,
                 100.0 * (e.poa - 1.0));
    } else {
      fmt::print("{:>8} {:>10} {:>14} {:>14}  {}\n", e.factor, dsm::to_string(e.mechanism), "-", "-", e.diagnostic);
    }
  }
  for (const auto& d : sweep.diagnostics) fmt::print(stderr, "note: {}\n", d);
  const auto factors = sweep.feasible_factors();
  if (factors.empty()) {
    fmt::print(stderr, "error: no feasible scaling factor\n");
    return 1;
  }
  for (auto m : mechanisms) {
    fmt::print("Spearman(factor, F {}) = {:.4f}\n", dsm::to_string(m), dsm::spearman(factors, sweep.fairness(m)));
  }
  fmt::print("results written to {}\n", opt.out);
  return 0;
}

int run_generate(const Options& opt) {
  auto spec = dsm::parse_synthetic_spec(dsm::read_text_file(opt.config));
  if (opt.seed) spec.seed = *opt.seed;
  const auto data = dsm::generate_synthetic(spec);
  dsm::write_synthetic(data, spec, opt.out);
  fmt::print("{} days x {} consumers\n", data.days.size(), spec.num_consumers);
  fmt::print("mean daily energy {:.1f} kWh (target {:.1f})\n", data.stats.mean_daily_energy, spec.target_daily_energy());
  fmt::print("flexible share    {:.4f} (target {:.4f})\n", data.stats.flexible_share, spec.flexible_share);
  fmt::print("mean nonflexible  {:.2f} kWh/h\n", data.stats.mean_nonflexible);
  fmt::print("written to {}\n", opt.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demand-side management billing simulator"};
  app.require_subcommand(1);
  Options opt;
  auto* simulate = add_command(app, "simulate", "equilibria and metrics for the configured mechanisms", opt, true);
  auto* compare = add_command(app, "compare", "DP, HP, Baseline and PeakOff side by side", opt, true);
  auto* sweep = add_command(app, "sweep", "fairness under scaled power constraints", opt, false);
  auto* generate = add_command(app, "generate", "synthetic population, history and scenarios", opt, false);
  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulation(run_config(opt), opt);
    if (compare->parsed()) {
      auto config = run_config(opt);
      config.mechanisms = {dsm::Mechanism::DP, dsm::Mechanism::HP, dsm::Mechanism::Baseline, dsm::Mechanism::PeakOff};
      return run_simulation(std::move(config), opt);
    }
    if (sweep->parsed()) return run_sweep(opt);
    if (generate->parsed()) return run_generate(opt);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
