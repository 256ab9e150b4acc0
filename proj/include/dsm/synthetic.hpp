#pragma once

// Synthetic residential population standing in for metered data: EV
// charging (and optionally electric heating) as flexible load on top of a
// nonflexible load with morning and evening peaks. Calibrated to aggregate
// targets only (daily energy, flexible share).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsm/history.hpp"
#include "dsm/model.hpp"

namespace dsm {

class GenerationError : public Error {
 public:
  using Error::Error;
};

struct SyntheticSpec {
  std::size_t num_consumers = 30;
  std::size_t num_days = 30;
  std::string start_date = "2016-01-02";
  double daily_energy = 1014.0;        // kWh, all consumers, flexible + nonflexible
  double flexible_share = 0.204;
  /// Mean hourly nonflexible aggregate. When set it replaces daily_energy:
  /// daily_energy = 24 * mean_nonflexible / (1 - flexible_share).
  std::optional<double> mean_nonflexible;
  bool furnaces = false;               // heating as a second flexible appliance
  /// An appliance's daily energy never exceeds this fraction of its capacity
  /// (sum of max_power), so constraints can be halved and stay feasible.
  double max_fill = 0.45;
  std::vector<double> ev_caps{3.3, 6.6, 7.2};  // kW charger ratings to draw from
  std::uint64_t seed = 42;

  /// Throws GenerationError on out-of-range fields.
  void validate() const;
  double target_daily_energy() const;
};

struct SyntheticStats {
  double mean_daily_energy = 0.0;
  double flexible_share = 0.0;
  double mean_nonflexible = 0.0;   // mean over days and hours of the aggregate
};

struct SyntheticData {
  std::vector<Scenario> days;      // observed schedules included
  History history;
  Calendar calendar;
  CostModel base_cost;             // cost of the total load
  SyntheticStats stats;
};

/// The total-load cost 0.1 + 8 L + 0.04 L^2 (cents) at every hour.
CostModel default_base_cost(std::size_t num_hours = 24);

/// Deterministic in the spec (including the seed). Throws GenerationError
/// when the flexible target does not fit the appliances' capacity.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace dsm
