#include "dsm/billing.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace dsm {

double BillVector::total() const { return std::accumulate(bills.begin(), bills.end(), 0.0); }

BillVector bill_dp(const LoadProfile& profile, const Scenario& s) {
  const double total_energy = s.total_energy();
  if (!(total_energy > 0.0)) throw DegenerateError("DP billing needs a positive total energy");
  const double cost = s.cost_model.total_cost(profile.aggregate());
  BillVector out{std::vector<double>(s.num_consumers()), Mechanism::DP};
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    out.bills[n] = s.consumers[n].total_energy() / total_energy * cost;
  }
  return out;
}

BillVector bill_hp(const LoadProfile& profile, const Scenario& s) {
  if (s.cost_model.has_constant_term()) throw InvalidInputError("HP billing requires a0 = 0 at every hour");
  const auto total = profile.aggregate();
  BillVector out{std::vector<double>(s.num_consumers(), 0.0), Mechanism::HP};
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const auto own = profile.consumer_load(n);
    for (std::size_t h = 0; h < own.size(); ++h) {
      if (own[h] == 0.0) continue;
      out.bills[n] += own[h] / total[h] * s.cost_model.cost(h, total[h]);
    }
  }
  return out;
}

BillVector bill_baseline(const LoadProfile& profile, double price_per_kwh) {
  BillVector out{std::vector<double>(profile.num_consumers()), Mechanism::Baseline};
  for (std::size_t n = 0; n < profile.num_consumers(); ++n) out.bills[n] = price_per_kwh * profile.consumer_energy(n);
  return out;
}

LoadProfile greedy_offpeak_shift(const LoadProfile& profile, const Scenario& s, std::uint64_t seed) {
  LoadProfile shifted = profile;
  std::vector<std::size_t> offpeak;
  std::vector<std::size_t> peak;
  for (std::size_t h = 0; h < s.num_hours(); ++h) (s.is_peak(h) ? peak : offpeak).push_back(h);
  std::mt19937_64 rng(seed);
  std::shuffle(offpeak.begin(), offpeak.end(), rng);

  for (std::size_t target : offpeak) {
    for (std::size_t n = 0; n < s.num_consumers(); ++n) {
      const auto& c = s.consumers[n];
      for (std::size_t a = 0; a < c.appliances.size(); ++a) {
        const auto& app = c.appliances[a];
        auto row = shifted.appliance(n, a);
        for (;;) {
          const double room = app.max_power[target] - row[target];
          if (room <= 0.0) break;
          std::size_t source = 0;
          double movable = 0.0;
          for (std::size_t p : peak) {
            const double m = row[p] - app.min_power[p];
            if (m > movable) {
              movable = m;
              source = p;
            }
          }
          if (movable <= 0.0) break;
          if (movable <= room) {
            row[source] = app.min_power[source];
            row[target] += movable;
          } else {
            row[source] -= room;
            row[target] = app.max_power[target];
          }
        }
      }
    }
  }
  return shifted;
}

BillVector bill_peak_offpeak(const LoadProfile& shifted, const Scenario& s, double offpeak_price) {
  BillVector out{std::vector<double>(s.num_consumers(), 0.0), Mechanism::PeakOff};
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const auto load = shifted.consumer_load(n);
    double on = 0.0;
    double off = 0.0;
    for (std::size_t h = 0; h < load.size(); ++h) (s.is_peak(h) ? on : off) += load[h];
    out.bills[n] = s.peak_price_ratio * offpeak_price * on + offpeak_price * off;
  }
  return out;
}

Externalities externalities(const Scenario& s, const SolveSettings& settings) {
  auto full = social_optimum(s, settings);
  if (!full.converged) {
    throw Error(fmt::format("social optimum did not converge (residual {})", full.residual));
  }
  Externalities out;
  out.optimum_cost = full.objective;
  out.values.resize(s.num_consumers());
  out.leave_one_out.resize(s.num_consumers());

  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const Scenario reduced = without_consumer(s, n);
    // Warm start from the full optimum without consumer n's rows.
    LoadProfile start(reduced);
    for (std::size_t m = 0, k = 0; m < s.num_consumers(); ++m) {
      if (m == n) continue;
      const auto block = full.solution.consumer_block(m);
      std::copy(block.begin(), block.end(), start.consumer_block(k++).begin());
    }
    const auto sub = social_optimum(reduced, settings, &start);
    if (!sub.converged) {
      throw Error(fmt::format("optimum without consumer {} did not converge (residual {})", s.consumers[n].id,
                              sub.residual));
    }
    out.leave_one_out[n] = sub.objective;
    out.values[n] = full.objective - sub.objective;
    if (out.values[n] < -settings.tolerance * std::max(1.0, std::abs(full.objective))) {
      throw Error(fmt::format("negative externality {} for consumer {}", out.values[n], s.consumers[n].id));
    }
  }
  out.optimum = std::move(full.solution);
  return out;
}

FairReference bill_fair_reference(const LoadProfile& profile, const Scenario& s,
                                  std::span<const double> externality, double optimum_cost) {
  const double total_v = std::accumulate(externality.begin(), externality.end(), 0.0);
  if (!(total_v > 0.0)) throw DegenerateError("fair reference needs a positive total externality");
  const double cost = s.cost_model.total_cost(profile.aggregate());
  FairReference out{{std::vector<double>(externality.size()), Mechanism::VCG},
                    {std::vector<double>(externality.size()), Mechanism::FairRef}};
  for (std::size_t n = 0; n < externality.size(); ++n) {
    out.vcg.bills[n] = cost - (optimum_cost - externality[n]);
    out.fair.bills[n] = externality[n] / total_v * optimum_cost;
  }
  return out;
}

}  // namespace dsm
