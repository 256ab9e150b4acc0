#pragma once

// Best response dynamics for the DP and HP games, equilibrium checks, and
// the closed-form certificates for HP: the uniqueness condition and the
// price-of-anarchy bound obtained from local (lambda, mu)-smoothness.

#include <cstdint>
#include <vector>

#include "dsm/billing.hpp"
#include "dsm/model.hpp"
#include "dsm/qpsolve.hpp"

namespace dsm {

enum class PlayerOrder { random, round_robin };

struct BrdSettings {
  PlayerOrder order = PlayerOrder::random;
  std::uint64_t seed = 0;       // used by PlayerOrder::random
  double epsilon = 1e-5;        // cents; a round with no larger improvement ends the run
  int max_rounds = 100;         // one round = every consumer once
  bool trace = false;

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  std::size_t consumer = 0;
  double bill_before = 0.0;
  double bill_after = 0.0;
  HourVector aggregate;
};

struct EquilibriumResult {
  LoadProfile profile;
  BillVector bills;
  int rounds = 0;
  int total_best_responses = 0;
  double max_last_round_improvement = 0.0;
  bool converged = false;
  HourVector aggregate;
  std::vector<double> nash_gaps;  // verify_nash on the final profile
  std::vector<TraceRecord> trace;
};

/// Best response dynamics: consumers re-optimize one at a time against the
/// current aggregate of the others. A consumer whose view of the others has
/// not changed since its previous best response is not re-solved (its
/// improvement is zero). Stops after a round whose largest improvement is
/// at most epsilon, or after max_rounds.
EquilibriumResult run_brd(const Scenario& s, Mechanism mechanism, const BrdSettings& brd,
                          const SolveSettings& solve, const LoadProfile& start);

struct NashCheck {
  std::vector<double> gaps;  // bill(current) - bill(best response), per consumer
  double max_gap = 0.0;
  bool is_equilibrium = false;  // every gap <= epsilon
};

NashCheck verify_nash(const LoadProfile& profile, const Scenario& s, Mechanism mechanism, double epsilon,
                      const SolveSettings& solve = {});

struct UniquenessReport {
  HourVector lhs;      // (l^h)^2 / sum_n (l_n^h)^2
  HourVector rhs;      // (l^h c''_h / (2 c'_h))^2
  HourVector margin;   // lhs - rhs
  std::vector<bool> vacuous;  // l^h = 0: condition does not apply
  bool holds = false;  // margin > 0 at every non-vacuous hour
  double uniform_approximation = 0.0;  // N, the value of lhs for equal loads
};

/// Evaluates the sufficient condition for uniqueness of the HP equilibrium
/// at `profile`. With quadratic costs and a0 = 0 the per-unit price is
/// affine, so rhs is zero. Requires a0 = 0.
UniquenessReport check_uniqueness(const LoadProfile& profile, const Scenario& s);

struct SmoothnessCert {
  HourVector r;          // a1 / (a2 * load_cap) per hour; NaN where load_cap = 0
  double mu = 0.0;
  double lambda = 0.0;
  double poa_bound = 1.0;         // 1 + 3/4 sup_h 1 / (1 + r_h)
  double smoothness_bound = 1.0;  // lambda / (1 - mu)
  HourVector load_cap;
  bool valid = false;             // 0 < mu < 1 and at least one hour with load_cap > 0
};

/// Hours with load_cap = 0 carry no flexible load and are left out of the
/// suprema. Requires a0 = 0 and load_cap >= 0.
SmoothnessCert smoothness_certificate(const Scenario& s, const HourVector& load_cap);

/// sum over all appliances of max_power: the largest aggregate any feasible
/// profile can reach at each hour.
HourVector default_load_cap(const Scenario& s);

/// Per-hour closed forms, exposed for direct checks over r.
double smoothness_mu(double r);
double smoothness_lambda(double r, double mu);

}  // namespace dsm
