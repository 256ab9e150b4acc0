#pragma once

// Observed consumption history and the derivation of appliance constraints
// from it.
//
// History file (comma separated, header required, decimal numbers only):
//   consumer_id,appliance_id,date,hour,kwh
// The reserved appliance id "nonflexible" carries the nonflexible load.
//
// Calendar file:
//   date,day_type        with day_type one of weekday | weekend

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dsm/model.hpp"

namespace dsm {

inline constexpr const char* kNonflexibleId = "nonflexible";

enum class DayType { weekday, weekend };

std::string_view to_string(DayType t);
DayType parse_day_type(std::string_view text);

using Calendar = std::map<std::string, DayType>;

struct ApplianceHistory {
  std::string consumer_id;
  std::string appliance_id;
  std::map<std::string, HourVector> days;  // date -> kWh per hour
};

struct History {
  std::size_t num_hours = 24;
  /// Ordered by (consumer_id, appliance_id); includes nonflexible rows.
  std::vector<ApplianceHistory> series;

  std::vector<std::string> consumer_ids() const;
};

History parse_history(std::string_view csv, std::size_t num_hours = 24);
History load_history(const std::filesystem::path& path, std::size_t num_hours = 24);
Calendar parse_calendar(std::string_view csv);
Calendar load_calendar(const std::filesystem::path& path);

std::string format_history(const History& h, int digits = 4);
std::string format_calendar(const Calendar& c);

struct DerivedConstraints {
  std::vector<Appliance> appliances;
  std::vector<std::string> warnings;
};

/// Builds appliance constraints for days of type `day_type`:
///   - available hours: every hour active (kWh > 0) on some day of that type;
///   - max_power: the largest observation of the appliance over all days,
///     on available hours, 0 elsewhere; min_power = 0;
///   - energy: mean daily total over the calendar's days of that type (a
///     day without records counts as zero).
/// Appliances never active on that day type are left out with a warning.
DerivedConstraints derive_constraints(std::span<const ApplianceHistory> history, const Calendar& calendar,
                                      DayType day_type, std::size_t num_hours = 24);

struct DayScenario {
  Scenario scenario;
  std::vector<std::string> warnings;
};

/// Scenario replaying one observed day: constraints derived from the day's
/// type, each appliance's energy and observed schedule taken from that day,
/// and the flexible-load cost derived from `base_cost` and the day's
/// nonflexible load. Peak settings are copied from `tariff`.
DayScenario day_scenario(const History& history, const Calendar& calendar, const std::string& date,
                         const CostModel& base_cost, const Scenario& tariff);

}  // namespace dsm
