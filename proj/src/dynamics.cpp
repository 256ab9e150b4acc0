#include "dsm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace dsm {

namespace {

HourVector others_load(const HourVector& aggregate, const HourVector& own) {
  HourVector others(aggregate.size());
  for (std::size_t h = 0; h < others.size(); ++h) others[h] = std::max(0.0, aggregate[h] - own[h]);
  return others;
}

BillVector bills_for(const LoadProfile& profile, const Scenario& s, Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::DP: return bill_dp(profile, s);
    case Mechanism::HP: return bill_hp(profile, s);
    default: throw InvalidInputError(fmt::format("mechanism {} defines no game", to_string(mechanism)));
  }
}

}  // namespace

void BrdSettings::validate() const {
  if (!(epsilon > 0.0)) throw InvalidInputError(fmt::format("BRD epsilon must be > 0, got {}", epsilon));
  if (max_rounds < 1) throw InvalidInputError(fmt::format("BRD max_rounds must be >= 1, got {}", max_rounds));
}

EquilibriumResult run_brd(const Scenario& s, Mechanism mechanism, const BrdSettings& brd,
                          const SolveSettings& solve, const LoadProfile& start) {
  brd.validate();
  solve.validate();
  if (mechanism != Mechanism::DP && mechanism != Mechanism::HP) {
    throw InvalidInputError(fmt::format("mechanism {} defines no game", to_string(mechanism)));
  }
  if (auto bad = check_feasibility(start, s, 1e-6); !bad.empty()) {
    throw InvalidInputError(fmt::format("BRD start profile infeasible: {} {}: {}", bad.front().entity,
                                        bad.front().invariant, bad.front().detail));
  }

  EquilibriumResult out;
  out.profile = start;
  const std::size_t num = s.num_consumers();
  std::vector<std::size_t> order(num);
  std::iota(order.begin(), order.end(), 0);
  std::vector<bool> stale(num, true);
  std::mt19937_64 rng(brd.seed);
  int iteration = 0;

  for (int round = 1; round <= brd.max_rounds; ++round) {
    if (brd.order == PlayerOrder::random) std::shuffle(order.begin(), order.end(), rng);
    HourVector aggregate = out.profile.aggregate();
    double round_improvement = 0.0;
    for (std::size_t n : order) {
      if (!stale[n]) continue;
      auto block = out.profile.consumer_block(n);
      const HourVector own = out.profile.consumer_load(n);
      const HourVector others = others_load(aggregate, own);
      const double before = response_bill(n, block, others, mechanism, s);
      auto response = best_response(n, others, mechanism, s, solve, block);
      ++out.total_best_responses;
      ++iteration;
      stale[n] = false;
      const double improvement = before - response.objective;
      if (improvement > 0.0) {
        std::copy(response.solution.begin(), response.solution.end(), block.begin());
        const HourVector updated = out.profile.consumer_load(n);
        for (std::size_t h = 0; h < aggregate.size(); ++h) aggregate[h] = others[h] + updated[h];
        for (std::size_t m = 0; m < num; ++m) stale[m] = stale[m] || m != n;
        round_improvement = std::max(round_improvement, improvement);
      }
      if (brd.trace) {
        out.trace.push_back({iteration, n, before, improvement > 0.0 ? response.objective : before, aggregate});
      }
    }
    out.rounds = round;
    out.max_last_round_improvement = round_improvement;
    if (round_improvement <= brd.epsilon) {
      out.converged = true;
      break;
    }
  }

  out.aggregate = out.profile.aggregate();
  out.bills = bills_for(out.profile, s, mechanism);
  out.nash_gaps = verify_nash(out.profile, s, mechanism, brd.epsilon, solve).gaps;
  return out;
}

NashCheck verify_nash(const LoadProfile& profile, const Scenario& s, Mechanism mechanism, double epsilon,
                      const SolveSettings& solve) {
  NashCheck out;
  const HourVector aggregate = profile.aggregate();
  out.gaps.resize(s.num_consumers());
  out.max_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const auto block = profile.consumer_block(n);
    const HourVector others = others_load(aggregate, profile.consumer_load(n));
    const double current = response_bill(n, block, others, mechanism, s);
    const auto response = best_response(n, others, mechanism, s, solve, block);
    out.gaps[n] = current - response.objective;
    out.max_gap = std::max(out.max_gap, out.gaps[n]);
  }
  if (out.gaps.empty()) out.max_gap = 0.0;
  out.is_equilibrium = out.max_gap <= epsilon;
  return out;
}

UniquenessReport check_uniqueness(const LoadProfile& profile, const Scenario& s) {
  if (s.cost_model.has_constant_term()) throw InvalidInputError("uniqueness check requires a0 = 0 at every hour");
  const std::size_t hours = s.num_hours();
  UniquenessReport out;
  out.lhs.assign(hours, 0.0);
  out.rhs.assign(hours, 0.0);
  out.margin.assign(hours, 0.0);
  out.vacuous.assign(hours, false);
  out.uniform_approximation = static_cast<double>(s.num_consumers());

  std::vector<HourVector> loads;
  for (std::size_t n = 0; n < s.num_consumers(); ++n) loads.push_back(profile.consumer_load(n));
  const HourVector total = profile.aggregate();

  out.holds = true;
  for (std::size_t h = 0; h < hours; ++h) {
    double squares = 0.0;
    for (const auto& l : loads) squares += l[h] * l[h];
    if (!(total[h] > 0.0) || !(squares > 0.0)) {
      out.vacuous[h] = true;
      continue;
    }
    // c(l) = C(l) / l = a2 l + a1, so c' = a2 and c'' = 0.
    const double c1 = s.cost_model.a2[h];
    const double c2 = 0.0;
    out.lhs[h] = total[h] * total[h] / squares;
    const double ratio = total[h] * c2 / (2.0 * c1);
    out.rhs[h] = ratio * ratio;
    out.margin[h] = out.lhs[h] - out.rhs[h];
    if (!(out.margin[h] > 0.0)) out.holds = false;
  }
  return out;
}

double smoothness_mu(double r) {
  const double q = (1.0 + r) * (1.0 + r);
  return (-1.0 + std::sqrt(1.0 + q)) / q;
}

double smoothness_lambda(double r, double mu) {
  const double t = 1.0 + r * mu;
  return (t * t + mu) / (4.0 * (1.0 + r) * mu);
}

SmoothnessCert smoothness_certificate(const Scenario& s, const HourVector& load_cap) {
  const auto& cm = s.cost_model;
  if (cm.has_constant_term()) throw InvalidInputError("PoA bound requires a0 = 0 at every hour");
  if (load_cap.size() != s.num_hours()) throw InvalidInputError("load_cap must have one value per hour");

  SmoothnessCert cert;
  cert.load_cap = load_cap;
  cert.r.assign(load_cap.size(), std::numeric_limits<double>::quiet_NaN());
  double worst = 0.0;
  bool any = false;
  for (std::size_t h = 0; h < load_cap.size(); ++h) {
    if (load_cap[h] < 0.0) throw InvalidInputError(fmt::format("load_cap at hour {} is negative", h));
    if (load_cap[h] == 0.0) continue;
    const double r = cm.a1[h] / (cm.a2[h] * load_cap[h]);
    cert.r[h] = r;
    cert.mu = any ? std::max(cert.mu, smoothness_mu(r)) : smoothness_mu(r);
    worst = std::max(worst, 1.0 / (1.0 + r));
    any = true;
  }
  if (!any) return cert;

  for (std::size_t h = 0; h < load_cap.size(); ++h) {
    if (load_cap[h] == 0.0) continue;
    cert.lambda = std::max(cert.lambda, smoothness_lambda(cert.r[h], cert.mu));
  }
  cert.poa_bound = 1.0 + 0.75 * worst;
  cert.smoothness_bound = cert.lambda / (1.0 - cert.mu);
  cert.valid = cert.mu > 0.0 && cert.mu < 1.0;
  return cert;
}

HourVector default_load_cap(const Scenario& s) {
  HourVector cap(s.num_hours(), 0.0);
  for (const auto& c : s.consumers) {
    for (const auto& a : c.appliances) {
      for (std::size_t h = 0; h < cap.size(); ++h) cap[h] += a.max_power[h];
    }
  }
  return cap;
}

}  // namespace dsm
