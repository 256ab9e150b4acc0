#include "dsm/history.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "dsm/scenario_io.hpp"

namespace dsm {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Calls fn(line_number, fields) for every data row after checking the header.
template <class Fn>
void for_each_row(std::string_view csv, std::string_view expected_header, std::size_t columns, Fn&& fn) {
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = trim(csv.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != expected_header) {
        throw ParseError(fmt::format("line {}: expected header '{}'", line_no, expected_header));
      }
      header_seen = true;
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != columns) {
      throw ParseError(fmt::format("line {}: expected {} fields, got {}", line_no, columns, fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    fn(line_no, fields);
  }
  if (!header_seen) throw ParseError(fmt::format("missing header '{}'", expected_header));
}

}  // namespace

std::string_view to_string(DayType t) { return t == DayType::weekday ? "weekday" : "weekend"; }

DayType parse_day_type(std::string_view text) {
  if (text == "weekday") return DayType::weekday;
  if (text == "weekend") return DayType::weekend;
  throw ParseError(fmt::format("unknown day type '{}'", text));
}

std::vector<std::string> History::consumer_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : series) {
    if (ids.empty() || ids.back() != s.consumer_id) ids.push_back(s.consumer_id);
  }
  return ids;
}

History parse_history(std::string_view csv, std::size_t num_hours) {
  std::map<std::pair<std::string, std::string>, ApplianceHistory> by_key;
  for_each_row(csv, "consumer_id,appliance_id,date,hour,kwh", 5, [&](std::size_t line, const auto& f) {
    std::size_t hour = 0;
    const auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), hour);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size() || hour >= num_hours) {
      throw ParseError(fmt::format("line {}: invalid hour '{}'", line, f[3]));
    }
    double kwh = 0.0;
    try {
      kwh = parse_decimal(f[4]);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("line {}: {}", line, e.what()));
    }
    if (kwh < 0.0) throw ParseError(fmt::format("line {}: negative kwh", line));
    auto& series = by_key[{std::string(f[0]), std::string(f[1])}];
    series.consumer_id = f[0];
    series.appliance_id = f[1];
    auto& day = series.days[std::string(f[2])];
    if (day.empty()) day.assign(num_hours, 0.0);
    day[hour] += kwh;
  });
  History out;
  out.num_hours = num_hours;
  for (auto& [key, series] : by_key) out.series.push_back(std::move(series));
  return out;
}

History load_history(const std::filesystem::path& path, std::size_t num_hours) {
  try {
    return parse_history(read_text_file(path), num_hours);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

Calendar parse_calendar(std::string_view csv) {
  Calendar out;
  for_each_row(csv, "date,day_type", 2, [&](std::size_t line, const auto& f) {
    try {
      out[std::string(f[0])] = parse_day_type(f[1]);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("line {}: {}", line, e.what()));
    }
  });
  return out;
}

Calendar load_calendar(const std::filesystem::path& path) {
  try {
    return parse_calendar(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_history(const History& h, int digits) {
  std::string out = "consumer_id,appliance_id,date,hour,kwh\n";
  for (const auto& s : h.series) {
    for (const auto& [date, values] : s.days) {
      for (std::size_t hour = 0; hour < values.size(); ++hour) {
        out += fmt::format("{},{},{},{},{}\n", s.consumer_id, s.appliance_id, date, hour,
                           format_decimal(values[hour], digits));
      }
    }
  }
  return out;
}

std::string format_calendar(const Calendar& c) {
  std::string out = "date,day_type\n";
  for (const auto& [date, type] : c) out += fmt::format("{},{}\n", date, to_string(type));
  return out;
}

DerivedConstraints derive_constraints(std::span<const ApplianceHistory> history, const Calendar& calendar,
                                      DayType day_type, std::size_t num_hours) {
  DerivedConstraints out;
  std::vector<std::string> type_days;
  for (const auto& [date, type] : calendar) {
    if (type == day_type) type_days.push_back(date);
  }
  if (type_days.empty()) {
    out.warnings.push_back(fmt::format("calendar has no {} days", to_string(day_type)));
    return out;
  }

  for (const auto& series : history) {
    if (series.appliance_id == kNonflexibleId) continue;
    std::vector<bool> active(num_hours, false);
    double peak = 0.0;
    for (const auto& [date, values] : series.days) {
      for (std::size_t h = 0; h < num_hours && h < values.size(); ++h) peak = std::max(peak, values[h]);
    }
    double energy = 0.0;
    for (const auto& date : type_days) {
      const auto it = series.days.find(date);
      if (it == series.days.end()) continue;
      for (std::size_t h = 0; h < num_hours && h < it->second.size(); ++h) {
        if (it->second[h] > 0.0) active[h] = true;
        energy += it->second[h];
      }
    }
    if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
      out.warnings.push_back(fmt::format("appliance {}/{} never active on {} days; omitted", series.consumer_id,
                                         series.appliance_id, to_string(day_type)));
      continue;
    }
    Appliance app;
    app.id = series.appliance_id;
    app.energy = energy / static_cast<double>(type_days.size());
    app.min_power.assign(num_hours, 0.0);
    app.max_power.assign(num_hours, 0.0);
    for (std::size_t h = 0; h < num_hours; ++h) {
      if (active[h]) app.max_power[h] = peak;
    }
    out.appliances.push_back(std::move(app));
  }
  return out;
}

DayScenario day_scenario(const History& history, const Calendar& calendar, const std::string& date,
                         const CostModel& base_cost, const Scenario& tariff) {
  const auto type_it = calendar.find(date);
  if (type_it == calendar.end()) throw InvalidInputError(fmt::format("date {} is not in the calendar", date));
  const std::size_t hours = history.num_hours;

  DayScenario out;
  Scenario& s = out.scenario;
  s.day_id = date;
  s.horizon.num_hours = hours;
  s.peak_hours = tariff.peak_hours;
  s.peak_price_ratio = tariff.peak_price_ratio;
  s.offpeak_price = tariff.offpeak_price;
  s.baseline_price = tariff.baseline_price;

  for (const auto& id : history.consumer_ids()) {
    Consumer consumer;
    consumer.id = id;
    consumer.nonflexible.assign(hours, 0.0);
    std::vector<ApplianceHistory> own;
    for (const auto& series : history.series) {
      if (series.consumer_id != id) continue;
      if (series.appliance_id == kNonflexibleId) {
        if (const auto it = series.days.find(date); it != series.days.end()) consumer.nonflexible = it->second;
      } else {
        own.push_back(series);
      }
    }
    auto derived = derive_constraints(own, calendar, type_it->second, hours);
    for (auto& w : derived.warnings) out.warnings.push_back(std::move(w));
    for (auto& app : derived.appliances) {
      const auto series = std::find_if(own.begin(), own.end(),
                                       [&](const ApplianceHistory& h) { return h.appliance_id == app.id; });
      const auto day = series->days.find(date);
      app.observed = day != series->days.end() ? day->second : HourVector(hours, 0.0);
      double total = 0.0;
      for (double v : app.observed) total += v;
      app.energy = total;
      consumer.appliances.push_back(std::move(app));
    }
    s.consumers.push_back(std::move(consumer));
  }
  s.cost_model = flexible_cost_model(base_cost, s.nonflexible_total());
  return out;
}

}  // namespace dsm
