#pragma once

// Billing mechanisms mapping a load profile to one bill per consumer.

#include <cstdint>
#include <span>
#include <vector>

#include "dsm/model.hpp"
#include "dsm/qpsolve.hpp"

namespace dsm {

struct BillVector {
  std::vector<double> bills;  // cents, one per consumer
  Mechanism mechanism = Mechanism::DP;

  double total() const;
};

/// Daily proportional: b_n = E_n / sum_m E_m * sum_h C_h(l^h).
BillVector bill_dp(const LoadProfile& profile, const Scenario& s);

/// Hourly proportional: b_n = sum_h l_n^h / l^h * C_h(l^h). An hour where the
/// consumer has no load contributes nothing. Requires a0 = 0.
BillVector bill_hp(const LoadProfile& profile, const Scenario& s);

/// Flat price per kWh on each consumer's total consumption in `profile`.
BillVector bill_baseline(const LoadProfile& profile, double price_per_kwh);

/// Moves on-peak load to off-peak hours the way a consumer facing a two-rate
/// tariff would: off-peak hours are visited in a seeded random order, and at
/// each one every appliance (consumer, then appliance index order) fills the
/// hour up to its max_power, draining its heaviest peak hour first. Energy
/// per appliance is conserved; on-peak load remains only when the
/// appliance's off-peak capacity is exhausted.
LoadProfile greedy_offpeak_shift(const LoadProfile& profile, const Scenario& s, std::uint64_t seed);

/// b_n = ratio * p_off * (peak-hour energy) + p_off * (off-peak energy).
BillVector bill_peak_offpeak(const LoadProfile& shifted, const Scenario& s, double offpeak_price);

struct Externalities {
  std::vector<double> values;          // V_n = C*_N - C*_{N \ n}
  double optimum_cost = 0.0;           // C*_N
  std::vector<double> leave_one_out;   // C*_{N \ n}
  LoadProfile optimum;                 // argmin for the full population
};

/// Solves the full social optimum and the N leave-one-out optima. The cost
/// functions are kept fixed when a consumer is removed.
///
/// Throws Error naming the excluded consumer when a sub-solve does not
/// converge, and when some V_n is below -tolerance * max(1, C*_N): a
/// negative externality means a solve is wrong, so it is never clamped.
Externalities externalities(const Scenario& s, const SolveSettings& settings);

struct FairReference {
  BillVector vcg;   // sum_h C_h(l^h) - C*_{N \ n}, at the given profile
  BillVector fair;  // V_n / sum_m V_m * C*_N
};

/// Throws DegenerateError when sum_m V_m is not positive.
FairReference bill_fair_reference(const LoadProfile& profile, const Scenario& s,
                                  std::span<const double> externality, double optimum_cost);

}  // namespace dsm
