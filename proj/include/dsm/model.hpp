#pragma once

// Domain types for the energy-consumption scheduling game: appliances with
// daily energy requirements and hourly power bounds, consumers, per-hour
// quadratic cost functions and the load profile tensor x[n][a][h].
//
// Units: energy in kWh per step, money in dollar cents.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsm {

using HourVector = std::vector<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An empty constraint set (no feasible power vector).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A quantity needed for normalization is zero (no demand, no cost, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Inputs that violate an operation's precondition.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Billing mechanisms. DP and HP define games; Baseline and PeakOff are
/// reference tariffs; VCG and FairRef are the externality-based references.
enum class Mechanism { DP, HP, Baseline, PeakOff, VCG, FairRef };

std::string_view to_string(Mechanism m);
/// Accepts the names produced by to_string (case-sensitive).
Mechanism parse_mechanism(std::string_view name);

struct Horizon {
  std::size_t num_hours = 24;
};

struct Appliance {
  std::string id;
  double energy = 0.0;      // kWh required over the day
  HourVector min_power;     // kWh per step, per hour
  HourVector max_power;
  HourVector observed;      // observed (unoptimized) schedule, empty if unknown

  /// Hours h with max_power[h] > 0.
  std::vector<std::size_t> available_hours() const;
  double min_total() const;
  double max_total() const;
};

struct Consumer {
  std::string id;
  std::vector<Appliance> appliances;
  HourVector nonflexible;

  double total_energy() const;
};

/// C_h(l) = a2[h] l^2 + a1[h] l + a0[h].
struct CostModel {
  HourVector a2;
  HourVector a1;
  HourVector a0;

  static CostModel uniform(std::size_t num_hours, double a2, double a1, double a0);

  std::size_t num_hours() const { return a2.size(); }
  double cost(std::size_t h, double load) const {
    return (a2[h] * load + a1[h]) * load + a0[h];
  }
  double marginal(std::size_t h, double load) const { return 2.0 * a2[h] * load + a1[h]; }
  double total_cost(std::span<const double> load) const;
  bool has_constant_term() const;
};

struct Scenario {
  std::string day_id;
  Horizon horizon;
  std::vector<Consumer> consumers;
  CostModel cost_model;                       // cost of the flexible load
  std::vector<std::size_t> peak_hours{7, 8, 17, 18, 19, 20};
  double peak_price_ratio = 2.84;
  double offpeak_price = 8.5;                 // cents per kWh
  double baseline_price = 8.5;                // cents per kWh

  std::size_t num_hours() const { return horizon.num_hours; }
  std::size_t num_consumers() const { return consumers.size(); }
  bool is_peak(std::size_t h) const;
  double total_energy() const;
  HourVector nonflexible_total() const;
};

/// Flat (consumer, appliance, hour) power tensor. Appliance rows of one
/// consumer are contiguous, so a consumer's whole block is a single span.
class LoadProfile {
 public:
  LoadProfile() = default;
  /// Zero profile shaped like the scenario.
  explicit LoadProfile(const Scenario& s);

  std::size_t num_hours() const { return hours_; }
  std::size_t num_consumers() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_appliances(std::size_t n) const { return offsets_[n + 1] - offsets_[n]; }

  std::span<double> appliance(std::size_t n, std::size_t a);
  std::span<const double> appliance(std::size_t n, std::size_t a) const;
  std::span<double> consumer_block(std::size_t n);
  std::span<const double> consumer_block(std::size_t n) const;
  std::span<const double> data() const { return data_; }

  double& at(std::size_t n, std::size_t a, std::size_t h) {
    return data_[(offsets_[n] + a) * hours_ + h];
  }
  double at(std::size_t n, std::size_t a, std::size_t h) const {
    return data_[(offsets_[n] + a) * hours_ + h];
  }

  HourVector consumer_load(std::size_t n) const;
  HourVector aggregate() const;
  double consumer_energy(std::size_t n) const;

  friend bool operator==(const LoadProfile&, const LoadProfile&) = default;

 private:
  std::size_t hours_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

/// One broken invariant: which entity, which rule, and the offending values.
struct Violation {
  std::string entity;
  std::string invariant;
  std::string detail;
};

std::vector<Violation> validate_scenario(const Scenario& s);

/// Violations of the appliance constraints by a profile. Energy totals are
/// checked to `energy_tol * max(1, E)`; bounds are checked exactly.
std::vector<Violation> check_feasibility(const LoadProfile& profile, const Scenario& s,
                                         double energy_tol = 1e-9);
bool is_feasible(const LoadProfile& profile, const Scenario& s, double energy_tol = 1e-9);

/// Cost of the flexible load on top of the nonflexible load:
/// C_h(l) = base_h(nf_h + l) - base_h(nf_h). The constant term is exactly zero.
CostModel flexible_cost_model(const CostModel& base, std::span<const double> nonflexible_total);

/// Profile built from each appliance's `observed` schedule.
/// Throws InvalidInputError if an appliance has no observation.
LoadProfile observed_profile(const Scenario& s);

/// Copy of the scenario with every max_power multiplied by `factor`.
/// Observed schedules are dropped.
Scenario scale_max_power(const Scenario& s, double factor);

/// Copy of the scenario without consumer `n`.
Scenario without_consumer(const Scenario& s, std::size_t n);

}  // namespace dsm
