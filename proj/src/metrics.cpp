#include "dsm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace dsm {

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[idx[k]] = rank;
    i = j + 1;
  }
  return out;
}

}  // namespace

double social_cost(const LoadProfile& profile, const Scenario& s) {
  return s.cost_model.total_cost(profile.aggregate());
}

double price_of_anarchy(double equilibrium_cost, double optimum_cost) {
  if (!(optimum_cost > 0.0)) throw DegenerateError(fmt::format("optimum cost {} is not positive", optimum_cost));
  return equilibrium_cost / optimum_cost;
}

double fairness_index(std::span<const double> bills, std::span<const double> externality) {
  if (bills.size() != externality.size()) throw InvalidInputError("bills and externalities differ in length");
  const double total_b = std::accumulate(bills.begin(), bills.end(), 0.0);
  const double total_v = std::accumulate(externality.begin(), externality.end(), 0.0);
  if (!(total_b > 0.0)) throw DegenerateError("fairness index needs a positive bill total");
  if (!(total_v > 0.0)) throw DegenerateError("fairness index needs a positive externality total");
  double f = 0.0;
  for (std::size_t n = 0; n < bills.size(); ++n) f += std::abs(externality[n] / total_v - bills[n] / total_b);
  return f;
}

std::vector<double> SweepResult::fairness(Mechanism m) const {
  std::vector<double> out;
  for (const auto& e : entries) {
    if (e.feasible && e.mechanism == m) out.push_back(e.fairness_index);
  }
  return out;
}

std::vector<double> SweepResult::feasible_factors() const {
  std::vector<double> out;
  for (const auto& e : entries) {
    if (e.feasible && (out.empty() || out.back() != e.factor)) out.push_back(e.factor);
  }
  return out;
}

SweepResult constraint_scaling_sweep(const Scenario& s, std::span<const double> factors,
                                     std::span<const Mechanism> mechanisms, const SolveSettings& solve,
                                     const BrdSettings& brd) {
  for (Mechanism m : mechanisms) {
    if (m != Mechanism::DP && m != Mechanism::HP) {
      throw InvalidInputError(fmt::format("sweep supports DP and HP, not {}", to_string(m)));
    }
  }
  SweepResult out;
  for (double factor : factors) {
    const Scenario scaled = scale_max_power(s, factor);
    if (const auto bad = validate_scenario(scaled); !bad.empty()) {
      const std::string why = fmt::format("factor {}: {} violation(s), first: {} {} ({})", factor, bad.size(),
                                          bad.front().entity, bad.front().invariant, bad.front().detail);
      out.diagnostics.push_back(why);
      for (Mechanism m : mechanisms) out.entries.push_back({factor, m, false, 0.0, 0.0, why});
      continue;
    }
    const auto ext = externalities(scaled, solve);
    const LoadProfile start = initial_profile(scaled);
    for (Mechanism m : mechanisms) {
      const auto eq = run_brd(scaled, m, brd, solve, start);
      SweepEntry entry{factor, m, true, fairness_index(eq.bills, ext.values),
                       price_of_anarchy(social_cost(eq.profile, scaled), ext.optimum_cost), {}};
      if (!eq.converged) entry.diagnostic = "BRD did not converge";
      out.entries.push_back(std::move(entry));
    }
  }
  if (out.feasible_factors().empty()) out.diagnostics.push_back("no feasible factor");
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

}  // namespace dsm
