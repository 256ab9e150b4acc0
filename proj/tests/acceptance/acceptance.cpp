// Acceptance gate: one line per criterion, nonzero exit on any hard failure.
// Soft criteria print WARN instead of FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "dsm/experiment.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace dsm;
using namespace dsm::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int hard_failures = 0;

void report(int id, const std::string& name, bool soft, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = out.pass ? "PASS" : (soft ? "WARN" : "FAIL");
  if (!out.pass && !soft) ++hard_failures;
  std::cout << fmt::format("[{}] {:>2} {}: {} ({:.1f}s)", tag, id, name, out.detail, secs) << std::endl;
}

double mean_of(const std::vector<double>& v) { return mean_std(v).mean; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Results of the N = 30 synthetic days, shared by several criteria.
struct SyntheticRun {
  std::vector<Scenario> days;
  SimulationResult result;
  RunConfig config;
  std::vector<double> poa_minus_1(std::size_t k) const {
    std::vector<double> v;
    for (const auto& d : result.days) v.push_back(d.runs[k].metrics.poa - 1.0);
    return v;
  }
  std::vector<double> fairness(std::size_t k) const {
    std::vector<double> v;
    for (const auto& d : result.days) v.push_back(d.runs[k].metrics.fairness_index);
    return v;
  }
};

RunConfig synthetic_config(std::size_t num_days) {
  RunConfig c;
  SyntheticSpec spec;
  spec.num_consumers = 30;
  spec.num_days = num_days;
  spec.seed = 42;
  c.synthetic = spec;
  c.seed = 42;
  c.mechanisms = {Mechanism::DP, Mechanism::HP, Mechanism::Baseline, Mechanism::PeakOff};
  return c;
}

constexpr std::size_t kDP = 0, kHP = 1, kBaseline = 2, kPeakOff = 3;

}  // namespace

int main(int argc, char** argv) {
  const fs::path out_dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "dsm_acceptance";

  std::mt19937_64 rng(20240601);
  std::vector<Scenario> random_set;
  for (int t = 0; t < 20; ++t) random_set.push_back(random_scenario(rng, {.constant_term = true}));

  report(1, "DP optimality", false, [&] {
    double worst = 0.0;
    for (const auto& s : random_set) {
      const auto opt = social_optimum(s, {});
      const auto eq = run_brd(s, Mechanism::DP, {}, {}, initial_profile(s));
      worst = std::max(worst, social_cost(eq.profile, s) / opt.objective - 1.0);
    }
    return Outcome{worst <= 1e-4, fmt::format("max SC/SC*-1 = {:.3e} over 20 scenarios (limit 1e-4)", worst)};
  });

  report(2, "HP PoA bound", false, [&] {
    double worst_slack = 1e300, worst_poa = 0.0;
    for (const auto& raw : random_set) {
      const auto s = without_constant(raw);
      const auto opt = social_optimum(s, {});
      const auto eq = run_brd(s, Mechanism::HP, {}, {}, initial_profile(s));
      const double poa = social_cost(eq.profile, s) / opt.objective;
      const auto cert = smoothness_certificate(s, default_load_cap(s));
      if (!cert.valid) return Outcome{false, "certificate not valid"};
      worst_slack = std::min(worst_slack, cert.poa_bound - poa);
      worst_poa = std::max(worst_poa, poa);
    }
    return Outcome{worst_slack >= 0.0,
                   fmt::format("max PoA = {:.6f}, min (bound - PoA) = {:.4f}", worst_poa, worst_slack)};
  });

  SyntheticRun syn;
  syn.config = synthetic_config(10);
  syn.days = load_days(syn.config);
  syn.result = simulate(syn.days, syn.config);

  report(3, "HP near-optimality", true, [&] {
    const double m = 100.0 * mean_of(syn.poa_minus_1(kHP));
    return Outcome{m <= 1.0, fmt::format("mean PoA-1 = {:.4f}% (limit 1%, reference 0.0830%)", m)};
  });

  report(4, "fairness ordering", false, [&] {
    const double hp = mean_of(syn.fairness(kHP)), dp = mean_of(syn.fairness(kDP));
    return Outcome{hp < dp, fmt::format("mean F: HP {:.4f}% < DP {:.4f}%", 100.0 * hp, 100.0 * dp)};
  });

  report(5, "non-game mechanisms less efficient", false, [&] {
    const double hp = mean_of(syn.poa_minus_1(kHP));
    const double base = mean_of(syn.poa_minus_1(kBaseline));
    const double peak = mean_of(syn.poa_minus_1(kPeakOff));
    return Outcome{base > hp && peak > hp, fmt::format("mean PoA-1: Baseline {:.3f}%, PeakOff {:.3f}%, HP {:.4f}%",
                                                       100.0 * base, 100.0 * peak, 100.0 * hp)};
  });

  report(6, "constraint sweep trend", false, [&] {
    const std::vector<double> factors{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    const std::vector<Mechanism> mechs{Mechanism::DP, Mechanism::HP};
    const auto sweep = constraint_scaling_sweep(syn.days.front(), factors, mechs, {}, {});
    const auto feasible = sweep.feasible_factors();
    if (feasible.size() < 2) return Outcome{false, "fewer than two feasible factors"};
    const auto dp = sweep.fairness(Mechanism::DP), hp = sweep.fairness(Mechanism::HP);
    const double rho = spearman(feasible, dp);
    std::size_t widest = 0;
    std::string series;
    for (std::size_t i = 0; i < dp.size(); ++i) {
      if (dp[i] - hp[i] > dp[widest] - hp[widest]) widest = i;
      series += fmt::format("{}{}:{:.4f}/{:.4f}", i ? " " : "", feasible[i], dp[i], hp[i]);
    }
    return Outcome{rho <= 0.0 && widest == 0,
                   fmt::format("Spearman(F_DP, factor) = {:.3f}, widest gap at {}; F DP/HP {}", rho,
                               feasible[widest], series)};
  });

  report(7, "oracle equivalence", false, [&] {
    std::mt19937_64 tiny_rng(7);
    double opt_err = 0.0, br_err = 0.0, ext_err = 0.0;
    for (int t = 0; t < 50; ++t) {
      const std::size_t H = 1 + t % 3;
      const auto s = random_scenario(tiny_rng, {.min_consumers = 1, .max_consumers = 2, .hours = H});
      const auto grid = oracle::grid_social_optimum(s);
      const auto opt = social_optimum(s, {});
      opt_err = std::max(opt_err, relative_gap(opt.objective, grid.value));

      const auto p = random_profile(tiny_rng, s);
      HourVector others = p.aggregate();
      const auto own = p.consumer_load(0);
      for (std::size_t h = 0; h < H; ++h) others[h] = std::max(0.0, others[h] - own[h]) + 0.5;
      for (auto m : {Mechanism::DP, Mechanism::HP}) {
        const auto br = best_response(0, others, m, s, {});
        const auto g = oracle::grid_best_response(s, 0, others, m == Mechanism::HP);
        br_err = std::max(br_err, relative_gap(br.objective, g.value));
      }

      const auto ext = externalities(s, {});
      for (std::size_t n = 0; n < s.num_consumers(); ++n) {
        const double v = grid.value - oracle::grid_social_optimum(without_consumer(s, n)).value;
        ext_err = std::max(ext_err, std::abs(ext.values[n] - v) / std::max(std::abs(v), 1.0));
      }
    }
    return Outcome{opt_err <= 1e-3 && br_err <= 1e-3 && ext_err <= 2e-3,
                   fmt::format("max relative error: optimum {:.2e}, best response {:.2e}, externality {:.2e}",
                               opt_err, br_err, ext_err)};
  });

  report(8, "projection correctness", false, [&] {
    std::mt19937_64 prng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_sum = 0.0, worst_idem = 0.0, worst_vi = -1e300;
    bool bounds = true;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t H = 1 + t % 24;
      HourVector v(H), lo(H), hi(H);
      for (std::size_t h = 0; h < H; ++h) {
        v[h] = 40.0 * u(prng) - 20.0;
        lo[h] = u(prng) < 0.3 ? 2.0 * u(prng) : 0.0;
        hi[h] = lo[h] + (u(prng) < 0.15 ? 0.0 : 8.0 * u(prng));
      }
      const double lo_sum = std::accumulate(lo.begin(), lo.end(), 0.0);
      const double hi_sum = std::accumulate(hi.begin(), hi.end(), 0.0);
      const double E = lo_sum + u(prng) * (hi_sum - lo_sum);
      const auto x = project_appliance(v, E, lo, hi);
      for (std::size_t h = 0; h < H; ++h) bounds = bounds && x[h] >= lo[h] && x[h] <= hi[h];
      const double sum = std::accumulate(x.begin(), x.end(), 0.0);
      worst_sum = std::max(worst_sum, std::abs(sum - E) / std::max(1.0, E));
      worst_idem = std::max(worst_idem, max_abs_diff(project_appliance(x, E, lo, hi), x));
      for (int k = 0; k < 100; ++k) {
        const auto y = random_feasible(prng, E, lo, hi);
        double ip = 0.0, scale = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
          ip += (v[h] - x[h]) * (y[h] - x[h]);
          scale += std::abs(v[h] - x[h]) * std::abs(y[h] - x[h]);
        }
        worst_vi = std::max(worst_vi, ip / std::max(1.0, scale));
      }
    }
    const bool ok = bounds && worst_sum <= 1e-9 && worst_idem <= 1e-12 && worst_vi <= 1e-9;
    return Outcome{ok, fmt::format("bounds {}, max |sum-E|/max(1,E) = {:.1e}, idempotence {:.1e}, max VI {:.1e}",
                                   bounds ? "exact" : "VIOLATED", worst_sum, worst_idem, worst_vi)};
  });

  report(9, "uniqueness condition", false, [&] {
    std::mt19937_64 urng(9);
    bool rhs_zero = true, holds = true;
    for (int t = 0; t < 200; ++t) {
      const auto s = random_scenario(urng);
      const auto r = check_uniqueness(random_profile(urng, s), s);
      for (double v : r.rhs) rhs_zero = rhs_zero && v == 0.0;
      holds = holds && r.holds;
    }
    double worst = 0.0;
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (std::size_t N = 1; N <= 30; ++N) {
      const std::size_t H = 24;
      std::vector<Consumer> cs;
      HourVector load(H);
      for (double& l : load) l = u(urng);
      const double E = std::accumulate(load.begin(), load.end(), 0.0);
      for (std::size_t n = 0; n < N; ++n) cs.push_back(consumer("c" + std::to_string(n), {box_appliance("x", E, H, 0, 5)}, H));
      const auto s = scenario(std::move(cs), CostModel::uniform(H, 0.04, 8.0, 0.0));
      LoadProfile p(s);
      for (std::size_t n = 0; n < N; ++n) std::copy(load.begin(), load.end(), p.appliance(n, 0).begin());
      const auto r = check_uniqueness(p, s);
      for (std::size_t h = 0; h < H; ++h) {
        if (!r.vacuous[h]) worst = std::max(worst, std::abs(r.lhs[h] - static_cast<double>(N)));
      }
    }
    return Outcome{rhs_zero && holds && worst <= 1e-9,
                   fmt::format("RHS {} on 200 instances, condition {}, max |LHS-N| on uniform profiles = {:.1e}",
                               rhs_zero ? "= 0" : "NONZERO", holds ? "holds" : "FAILS", worst)};
  });

  report(10, "certificate closed forms", false, [&] {
    const std::size_t H = 24;
    auto s = scenario({consumer("c", {box_appliance("ev", 1, H, 0, 1)}, H)}, CostModel::uniform(H, 0.04, 8.0, 0.0));
    const double b1 = smoothness_certificate(s, HourVector(H, 100.0)).poa_bound;
    s.cost_model.a1.assign(H, 0.0);
    const double b2 = smoothness_certificate(s, HourVector(H, 100.0)).poa_bound;
    bool grid_ok = true;
    double min_ratio = 1e300;
    for (int i = 0; i <= 1000000; ++i) {
      const double r = 1000.0 * i / 1000000.0;
      const double mu = smoothness_mu(r);
      const double lambda = smoothness_lambda(r, mu);
      grid_ok = grid_ok && mu > 0.0 && mu < 1.0 && lambda > 0.0;
      min_ratio = std::min(min_ratio, lambda / (1.0 - mu));
    }
    const bool ok = std::abs(b1 - 1.25) <= 1e-12 && std::abs(b2 - 1.75) <= 1e-12 && grid_ok && min_ratio >= 1.0;
    return Outcome{ok, fmt::format("bound {:.12f} (1.25), {:.12f} (1.75); r-grid mu/lambda {}, min lambda/(1-mu) = {:.6f}",
                                   b1, b2, grid_ok ? "in range" : "OUT OF RANGE", min_ratio)};
  });

  report(11, "BRD practicality", true, [&] {
    const double dp = syn.result.summary[kDP].best_responses_per_consumer;
    const double hp = syn.result.summary[kHP].best_responses_per_consumer;
    bool converged = true;
    for (const auto& d : syn.result.days) converged = converged && d.runs[kDP].converged && d.runs[kHP].converged;
    return Outcome{converged && dp <= 10.0 && hp <= 10.0,
                   fmt::format("best responses per consumer: DP {:.2f}, HP {:.2f} (limit 10, reference ~3){}", dp, hp,
                               converged ? "" : "; some run did not converge")};
  });

  report(12, "determinism", false, [&] {
    auto config = synthetic_config(2);
    config.trace = true;
    config.mechanisms.push_back(Mechanism::FairRef);
    const fs::path a = out_dir / "run_a", b = out_dir / "run_b";
    for (const auto& dir : {a, b}) {
      fs::remove_all(dir);
      fs::create_directories(dir);
      write_results(simulate(load_days(config), config), config, dir);
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      if (slurp(entry.path()) != slurp(b / entry.path().filename())) {
        return Outcome{false, fmt::format("{} differs", entry.path().filename().string())};
      }
    }
    return Outcome{files > 0, fmt::format("{} results files byte-identical", files)};
  });

  return hard_failures == 0 ? 0 : 1;
}
