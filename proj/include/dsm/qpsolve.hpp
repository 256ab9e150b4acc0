#pragma once

// Convex kernel for the scheduling game. Every objective handled here is a
// sum over hours of a quadratic in the hour's summed power, so a single
// projected-gradient routine serves the social optimum and both best
// responses. Projection onto {x : sum x = E, lo <= x <= hi} is exact.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dsm/model.hpp"

namespace dsm {

enum class StepRule { fixed, backtracking };

struct SolveSettings {
  double tolerance = 1e-7;     // stop when the projected-gradient norm is below this
  int max_iterations = 10000;
  StepRule step_rule = StepRule::backtracking;

  /// Throws InvalidInputError unless tolerance > 0 and max_iterations >= 1.
  void validate() const;
};

template <class Solution>
struct SolveOutcome {
  Solution solution;
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

using OptimumOutcome = SolveOutcome<LoadProfile>;
/// Best response of one consumer: its appliance rows, appliance-major.
using ResponseOutcome = SolveOutcome<std::vector<double>>;

/// Euclidean projection of `v` onto {x : sum x = energy, min <= x <= max}.
///
/// Solves for the multiplier tau of the equality constraint so that
/// sum clip(v - tau, min, max) = energy. The piecewise-linear sum is searched
/// over its sorted breakpoints and tau is then solved in closed form on the
/// bracketing segment, so the result is exact up to rounding.
/// Throws InfeasibleError naming `name` when the set is empty.
HourVector project_appliance(std::span<const double> v, double energy, std::span<const double> min_power,
                             std::span<const double> max_power, std::string_view name = "appliance");

/// Deterministic feasible start: each appliance spread proportionally to its
/// max_power, then projected.
LoadProfile initial_profile(const Scenario& s);

/// Minimizes sum_h C_h(l^h) over all feasible profiles. `start` defaults to
/// initial_profile(s); any start is projected first.
OptimumOutcome social_optimum(const Scenario& s, const SolveSettings& settings,
                              const LoadProfile* start = nullptr);

/// Bill of consumer n under DP or HP given its own appliance rows and the
/// summed load of every other consumer.
double response_bill(std::size_t n, std::span<const double> block, std::span<const double> others_load,
                     Mechanism mechanism, const Scenario& s);

/// Minimizes consumer n's DP or HP bill over its own feasible set, seeing the
/// rest of the population only through `others_load`. The returned objective
/// is the bill in cents. `start` (appliance rows) defaults to the
/// proportional spread.
///
/// HP requires a0 = 0 at every hour: the per-unit price is singular at zero
/// load otherwise. DP is solved on the full cost, which differs from the bill
/// by the positive factor E_n / sum_m E_m.
ResponseOutcome best_response(std::size_t n, std::span<const double> others_load, Mechanism mechanism,
                              const Scenario& s, const SolveSettings& settings,
                              std::span<const double> start = {});

}  // namespace dsm
