#pragma once

// Efficiency (social cost, price of anarchy) and fairness indicators.

#include <span>
#include <string>
#include <vector>

#include "dsm/billing.hpp"
#include "dsm/dynamics.hpp"
#include "dsm/model.hpp"
#include "dsm/qpsolve.hpp"

namespace dsm {

struct MetricsReport {
  std::string day_id;
  Mechanism mechanism = Mechanism::DP;
  double social_cost = 0.0;
  double optimum_cost = 0.0;
  double poa = 1.0;
  double poa_bound = 0.0;       // HP only; NaN otherwise
  double fairness_index = 0.0;
  std::vector<double> externalities;
  std::vector<double> bills;
};

/// sum_h C_h(l^h).
double social_cost(const LoadProfile& profile, const Scenario& s);

/// SC / SC* at a computed equilibrium. Throws DegenerateError if optimum_cost <= 0.
double price_of_anarchy(double equilibrium_cost, double optimum_cost);

/// F = sum_n | V_n / sum V - b_n / sum b |, in [0, 2].
/// Throws DegenerateError if either total is not positive.
double fairness_index(std::span<const double> bills, std::span<const double> externality);
inline double fairness_index(const BillVector& bills, std::span<const double> externality) {
  return fairness_index(bills.bills, externality);
}

struct SweepEntry {
  double factor = 1.0;
  Mechanism mechanism = Mechanism::DP;
  bool feasible = false;
  double fairness_index = 0.0;
  double poa = 0.0;
  std::string diagnostic;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::vector<std::string> diagnostics;

  /// Fairness index per feasible factor, in factor order.
  std::vector<double> fairness(Mechanism m) const;
  std::vector<double> feasible_factors() const;
};

/// For each factor, scales every max_power, recomputes externalities and the
/// DP/HP equilibria from the proportional start, and records F. Factors that
/// leave some appliance infeasible are reported and skipped.
SweepResult constraint_scaling_sweep(const Scenario& s, std::span<const double> factors,
                                     std::span<const Mechanism> mechanisms, const SolveSettings& solve,
                                     const BrdSettings& brd);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// series is constant or shorter than two.
double spearman(std::span<const double> x, std::span<const double> y);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};
MeanStd mean_std(std::span<const double> values);

}  // namespace dsm
