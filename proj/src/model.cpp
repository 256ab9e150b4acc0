#include "dsm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace dsm {

namespace {

constexpr double kEnergyRelTol = 1e-9;
// Observed schedules come from files rounded to a few decimals.
constexpr double kObservedRelTol = 1e-6;

double energy_slack(double energy, double rel) { return rel * std::max(1.0, std::abs(energy)); }

void check_length(std::vector<Violation>& out, const std::string& entity, const char* field,
                  std::size_t actual, std::size_t expected) {
  if (actual != expected) {
    out.push_back({entity, fmt::format("{} has one value per hour", field),
                   fmt::format("length {} != {}", actual, expected)});
  }
}

void validate_appliance(std::vector<Violation>& out, const std::string& owner,
                        const Appliance& a, std::size_t hours) {
  const std::string entity = fmt::format("appliance {}/{}", owner, a.id);
  const std::size_t before = out.size();
  check_length(out, entity, "min_power", a.min_power.size(), hours);
  check_length(out, entity, "max_power", a.max_power.size(), hours);
  if (!a.observed.empty()) check_length(out, entity, "observed", a.observed.size(), hours);
  if (out.size() != before) return;

  if (!(a.energy >= 0.0) || !std::isfinite(a.energy)) {
    out.push_back({entity, "energy >= 0", fmt::format("energy = {}", a.energy)});
  }
  for (std::size_t h = 0; h < hours; ++h) {
    if (!(a.min_power[h] >= 0.0)) {
      out.push_back({entity, "min_power >= 0", fmt::format("hour {}: min_power = {}", h, a.min_power[h])});
    }
    if (!(a.min_power[h] <= a.max_power[h])) {
      out.push_back({entity, "min_power <= max_power",
                     fmt::format("hour {}: min_power = {} > max_power = {}", h, a.min_power[h],
                                 a.max_power[h])});
    }
  }
  const double lo = a.min_total();
  const double hi = a.max_total();
  const double slack = energy_slack(a.energy, kEnergyRelTol);
  if (a.energy < lo - slack || a.energy > hi + slack) {
    out.push_back({entity, "sum(min_power) <= energy <= sum(max_power)",
                   fmt::format("energy = {} outside [{}, {}]", a.energy, lo, hi)});
  }
  if (!a.observed.empty()) {
    double total = 0.0;
    for (std::size_t h = 0; h < hours; ++h) {
      total += a.observed[h];
      if (a.observed[h] < a.min_power[h] || a.observed[h] > a.max_power[h]) {
        out.push_back({entity, "observed within power bounds",
                       fmt::format("hour {}: observed = {} outside [{}, {}]", h, a.observed[h],
                                   a.min_power[h], a.max_power[h])});
      }
    }
    if (std::abs(total - a.energy) > energy_slack(a.energy, kObservedRelTol)) {
      out.push_back({entity, "observed schedule meets the energy requirement",
                     fmt::format("sum(observed) = {} != energy = {}", total, a.energy)});
    }
  }
}

}  // namespace

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::DP: return "DP";
    case Mechanism::HP: return "HP";
    case Mechanism::Baseline: return "Baseline";
    case Mechanism::PeakOff: return "PeakOff";
    case Mechanism::VCG: return "VCG";
    case Mechanism::FairRef: return "FairRef";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view name) {
  for (auto m : {Mechanism::DP, Mechanism::HP, Mechanism::Baseline, Mechanism::PeakOff, Mechanism::VCG,
                 Mechanism::FairRef}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidInputError(fmt::format("unknown mechanism '{}'", name));
}

std::vector<std::size_t> Appliance::available_hours() const {
  std::vector<std::size_t> hours;
  for (std::size_t h = 0; h < max_power.size(); ++h) {
    if (max_power[h] > 0.0) hours.push_back(h);
  }
  return hours;
}

double Appliance::min_total() const { return std::accumulate(min_power.begin(), min_power.end(), 0.0); }
double Appliance::max_total() const { return std::accumulate(max_power.begin(), max_power.end(), 0.0); }

double Consumer::total_energy() const {
  double total = 0.0;
  for (const auto& a : appliances) total += a.energy;
  return total;
}

CostModel CostModel::uniform(std::size_t num_hours, double a2, double a1, double a0) {
  return CostModel{HourVector(num_hours, a2), HourVector(num_hours, a1), HourVector(num_hours, a0)};
}

double CostModel::total_cost(std::span<const double> load) const {
  double total = 0.0;
  for (std::size_t h = 0; h < load.size(); ++h) total += cost(h, load[h]);
  return total;
}

bool CostModel::has_constant_term() const {
  return std::any_of(a0.begin(), a0.end(), [](double c) { return c != 0.0; });
}

bool Scenario::is_peak(std::size_t h) const {
  return std::find(peak_hours.begin(), peak_hours.end(), h) != peak_hours.end();
}

double Scenario::total_energy() const {
  double total = 0.0;
  for (const auto& c : consumers) total += c.total_energy();
  return total;
}

HourVector Scenario::nonflexible_total() const {
  HourVector total(num_hours(), 0.0);
  for (const auto& c : consumers) {
    for (std::size_t h = 0; h < total.size() && h < c.nonflexible.size(); ++h) total[h] += c.nonflexible[h];
  }
  return total;
}

LoadProfile::LoadProfile(const Scenario& s) : hours_(s.num_hours()) {
  offsets_.reserve(s.num_consumers() + 1);
  offsets_.push_back(0);
  for (const auto& c : s.consumers) offsets_.push_back(offsets_.back() + c.appliances.size());
  data_.assign(offsets_.back() * hours_, 0.0);
}

std::span<double> LoadProfile::appliance(std::size_t n, std::size_t a) {
  return std::span<double>(data_).subspan((offsets_[n] + a) * hours_, hours_);
}

std::span<const double> LoadProfile::appliance(std::size_t n, std::size_t a) const {
  return std::span<const double>(data_).subspan((offsets_[n] + a) * hours_, hours_);
}

std::span<double> LoadProfile::consumer_block(std::size_t n) {
  return std::span<double>(data_).subspan(offsets_[n] * hours_, num_appliances(n) * hours_);
}

std::span<const double> LoadProfile::consumer_block(std::size_t n) const {
  return std::span<const double>(data_).subspan(offsets_[n] * hours_, num_appliances(n) * hours_);
}

HourVector LoadProfile::consumer_load(std::size_t n) const {
  HourVector load(hours_, 0.0);
  for (std::size_t a = 0; a < num_appliances(n); ++a) {
    const auto row = appliance(n, a);
    for (std::size_t h = 0; h < hours_; ++h) load[h] += row[h];
  }
  return load;
}

HourVector LoadProfile::aggregate() const {
  HourVector load(hours_, 0.0);
  for (std::size_t i = 0; i < data_.size(); ++i) load[i % hours_] += data_[i];
  return load;
}

double LoadProfile::consumer_energy(std::size_t n) const {
  const auto block = consumer_block(n);
  return std::accumulate(block.begin(), block.end(), 0.0);
}

std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  const std::size_t hours = s.num_hours();
  if (hours < 1) {
    out.push_back({"horizon", "num_hours >= 1", fmt::format("num_hours = {}", hours)});
    return out;
  }

  const auto& cm = s.cost_model;
  check_length(out, "cost_model", "a2", cm.a2.size(), hours);
  check_length(out, "cost_model", "a1", cm.a1.size(), hours);
  check_length(out, "cost_model", "a0", cm.a0.size(), hours);
  if (cm.a2.size() == hours && cm.a1.size() == hours && cm.a0.size() == hours) {
    for (std::size_t h = 0; h < hours; ++h) {
      if (!(cm.a2[h] > 0.0)) out.push_back({"cost_model", "a2 > 0", fmt::format("hour {}: a2 = {}", h, cm.a2[h])});
      if (!(cm.a1[h] >= 0.0)) out.push_back({"cost_model", "a1 >= 0", fmt::format("hour {}: a1 = {}", h, cm.a1[h])});
      if (!(cm.a0[h] >= 0.0)) out.push_back({"cost_model", "a0 >= 0", fmt::format("hour {}: a0 = {}", h, cm.a0[h])});
    }
  }

  for (std::size_t h : s.peak_hours) {
    if (h >= hours) out.push_back({"peak", "peak hours inside the horizon", fmt::format("hour {} >= {}", h, hours)});
  }
  if (!(s.peak_price_ratio >= 1.0)) {
    out.push_back({"peak", "price_ratio >= 1", fmt::format("price_ratio = {}", s.peak_price_ratio)});
  }

  std::set<std::string> ids;
  for (const auto& c : s.consumers) {
    const std::string entity = fmt::format("consumer {}", c.id);
    if (!ids.insert(c.id).second) out.push_back({entity, "unique consumer id", "duplicate id"});
    check_length(out, entity, "nonflexible", c.nonflexible.size(), hours);
    if (c.nonflexible.size() == hours) {
      for (std::size_t h = 0; h < hours; ++h) {
        if (!(c.nonflexible[h] >= 0.0)) {
          out.push_back({entity, "nonflexible >= 0", fmt::format("hour {}: nonflexible = {}", h, c.nonflexible[h])});
        }
      }
    }
    std::set<std::string> appliance_ids;
    for (const auto& a : c.appliances) {
      if (!appliance_ids.insert(a.id).second) {
        out.push_back({fmt::format("appliance {}/{}", c.id, a.id), "unique appliance id", "duplicate id"});
      }
      validate_appliance(out, c.id, a, hours);
    }
  }
  return out;
}

std::vector<Violation> check_feasibility(const LoadProfile& profile, const Scenario& s, double energy_tol) {
  std::vector<Violation> out;
  if (profile.num_consumers() != s.num_consumers() || profile.num_hours() != s.num_hours()) {
    out.push_back({"profile", "shape matches scenario", "consumer or hour count differs"});
    return out;
  }
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const auto& c = s.consumers[n];
    if (profile.num_appliances(n) != c.appliances.size()) {
      out.push_back({fmt::format("consumer {}", c.id), "shape matches scenario", "appliance count differs"});
      continue;
    }
    for (std::size_t a = 0; a < c.appliances.size(); ++a) {
      const auto& app = c.appliances[a];
      const auto row = profile.appliance(n, a);
      const std::string entity = fmt::format("appliance {}/{}", c.id, app.id);
      double total = 0.0;
      for (std::size_t h = 0; h < row.size(); ++h) {
        total += row[h];
        if (row[h] < app.min_power[h] || row[h] > app.max_power[h]) {
          out.push_back({entity, "power within bounds",
                         fmt::format("hour {}: {} outside [{}, {}]", h, row[h], app.min_power[h], app.max_power[h])});
        }
      }
      if (std::abs(total - app.energy) > energy_slack(app.energy, energy_tol)) {
        out.push_back({entity, "daily energy met", fmt::format("sum = {} != energy = {}", total, app.energy)});
      }
    }
  }
  return out;
}

bool is_feasible(const LoadProfile& profile, const Scenario& s, double energy_tol) {
  return check_feasibility(profile, s, energy_tol).empty();
}

CostModel flexible_cost_model(const CostModel& base, std::span<const double> nonflexible_total) {
  const std::size_t hours = nonflexible_total.size();
  auto coefficient = [](const HourVector& v, std::size_t h) { return v.size() == 1 ? v[0] : v.at(h); };
  CostModel out;
  out.a2.resize(hours);
  out.a1.resize(hours);
  out.a0.assign(hours, 0.0);
  for (std::size_t h = 0; h < hours; ++h) {
    if (nonflexible_total[h] < 0.0) {
      throw InvalidInputError(fmt::format("nonflexible load at hour {} is negative ({})", h, nonflexible_total[h]));
    }
    const double a2 = coefficient(base.a2, h);
    out.a2[h] = a2;
    out.a1[h] = coefficient(base.a1, h) + 2.0 * a2 * nonflexible_total[h];
  }
  return out;
}

LoadProfile observed_profile(const Scenario& s) {
  LoadProfile profile(s);
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const auto& c = s.consumers[n];
    for (std::size_t a = 0; a < c.appliances.size(); ++a) {
      const auto& app = c.appliances[a];
      if (app.observed.size() != s.num_hours()) {
        throw InvalidInputError(fmt::format("appliance {}/{} has no observed schedule", c.id, app.id));
      }
      std::copy(app.observed.begin(), app.observed.end(), profile.appliance(n, a).begin());
    }
  }
  return profile;
}

Scenario scale_max_power(const Scenario& s, double factor) {
  Scenario out = s;
  for (auto& c : out.consumers) {
    for (auto& a : c.appliances) {
      for (double& p : a.max_power) p *= factor;
      // the observed schedule belongs to the unscaled constraints
      a.observed.clear();
    }
  }
  return out;
}

Scenario without_consumer(const Scenario& s, std::size_t n) {
  Scenario out = s;
  out.consumers.erase(out.consumers.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

}  // namespace dsm
