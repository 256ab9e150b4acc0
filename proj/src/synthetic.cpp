#include "dsm/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dsm/qpsolve.hpp"

namespace dsm {

namespace {

constexpr std::size_t kHours = 24;

enum class Plug { overnight, evening, daytime };

struct EvProfile {
  double cap = 0.0;
  Plug plug = Plug::overnight;
  int arrival = 18;   // first plugged hour
  int departure = 7;  // overnight: first unplugged hour in the morning; otherwise end (exclusive)
  double weight = 1.0;
};

struct FurnaceProfile {
  double cap = 0.0;
  double weight = 0.0;
};

struct Household {
  std::string id;
  double nf_weight = 1.0;
  EvProfile ev;
  std::optional<FurnaceProfile> furnace;
};

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::chrono::sys_days parse_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
    throw GenerationError(fmt::format("start_date '{}' is not YYYY-MM-DD", text));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw GenerationError(fmt::format("start_date '{}' is not a calendar date", text));
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

double bump(double h, double center, double width) {
  const double z = (h - center) / width;
  return std::exp(-0.5 * z * z);
}

double nonflexible_shape(std::size_t h, bool weekend) {
  const double hour = static_cast<double>(h);
  const double morning = weekend ? 0.4 * bump(hour, 9.0, 1.5) : 0.6 * bump(hour, 7.5, 1.0);
  return 0.6 + morning + 0.9 * bump(hour, 18.5, 1.5);
}

double coldness(std::size_t h) {
  return 1.0 + 0.6 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(h) - 4.0) / 24.0);
}

// Hours an EV is plugged in on a given day, in charging order.
std::vector<std::size_t> plug_hours(const EvProfile& ev, int shift) {
  std::vector<std::size_t> hours;
  const int arrival = std::clamp(ev.arrival + shift, 0, 23);
  switch (ev.plug) {
    case Plug::overnight: {
      for (int h = arrival; h < 24; ++h) hours.push_back(static_cast<std::size_t>(h));
      const int departure = std::clamp(ev.departure + shift / 2, 1, arrival);
      for (int h = 0; h < departure; ++h) hours.push_back(static_cast<std::size_t>(h));
      break;
    }
    case Plug::evening:
    case Plug::daytime: {
      const int end = std::clamp(ev.departure + shift, arrival + 1, 24);
      for (int h = arrival; h < end; ++h) hours.push_back(static_cast<std::size_t>(h));
      break;
    }
  }
  return hours;
}

// Energies e_i = min(cap_i, t * w_i) with sum e_i = target.
std::vector<double> fill(const std::vector<double>& weights, const std::vector<double>& caps, double target) {
  const double capacity = std::accumulate(caps.begin(), caps.end(), 0.0);
  if (target > capacity) {
    throw GenerationError(fmt::format(
        "flexible target {:.1f} kWh exceeds the usable appliance capacity {:.1f} kWh (max_fill applied); "
        "lower flexible_share or raise the power caps",
        target, capacity));
  }
  auto total = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += std::min(caps[i], t * weights[i]);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  while (total(hi) < target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < target ? lo : hi) = mid;
  }
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = std::min(caps[i], hi * weights[i]);
  return out;
}

std::vector<Household> draw_households(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<Household> out;
  for (std::size_t n = 0; n < spec.num_consumers; ++n) {
    Household hh;
    hh.id = fmt::format("c{:02d}", n + 1);
    hh.nf_weight = std::exp(0.35 * gauss(rng));
    hh.ev.cap = spec.ev_caps[static_cast<std::size_t>(pick(0, static_cast<int>(spec.ev_caps.size()) - 1))];
    const double u = unit(rng);
    if (u < 0.6) {
      hh.ev.plug = Plug::overnight;
      hh.ev.arrival = pick(17, 20);
      hh.ev.departure = pick(6, 8);
    } else if (u < 0.85) {
      hh.ev.plug = Plug::evening;
      hh.ev.arrival = pick(16, 18);
      hh.ev.departure = hh.ev.arrival + pick(4, 6);
    } else {
      hh.ev.plug = Plug::daytime;
      hh.ev.arrival = pick(9, 10);
      hh.ev.departure = pick(15, 17);
    }
    hh.ev.weight = 0.6 + 0.8 * unit(rng);
    if (spec.furnaces) hh.furnace = FurnaceProfile{3.0 + 2.0 * unit(rng), 0.27 * (0.6 + 0.8 * unit(rng))};
    out.push_back(std::move(hh));
  }
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_consumers < 1) throw GenerationError("num_consumers must be >= 1");
  if (num_days < 1) throw GenerationError("num_days must be >= 1");
  if (!(flexible_share > 0.0 && flexible_share < 1.0)) {
    throw GenerationError(fmt::format("flexible_share must lie in (0, 1), got {}", flexible_share));
  }
  if (mean_nonflexible && !(*mean_nonflexible > 0.0)) throw GenerationError("mean_nonflexible must be > 0");
  if (!mean_nonflexible && !(daily_energy > 0.0)) throw GenerationError("daily_energy must be > 0");
  if (!(max_fill > 0.0 && max_fill <= 1.0)) throw GenerationError("max_fill must lie in (0, 1]");
  if (ev_caps.empty() || std::any_of(ev_caps.begin(), ev_caps.end(), [](double c) { return !(c > 0.0); })) {
    throw GenerationError("ev_caps must be a non-empty list of positive ratings");
  }
  parse_date(start_date);
}

double SyntheticSpec::target_daily_energy() const {
  return mean_nonflexible ? 24.0 * *mean_nonflexible / (1.0 - flexible_share) : daily_energy;
}

CostModel default_base_cost(std::size_t num_hours) { return CostModel::uniform(num_hours, 0.04, 8.0, 0.1); }

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto households = draw_households(spec, rng);

  SyntheticData data;
  data.base_cost = default_base_cost(kHours);
  data.history.num_hours = kHours;
  std::map<std::pair<std::string, std::string>, ApplianceHistory> series;

  const auto first_day = parse_date(spec.start_date);
  double sum_total = 0.0, sum_share = 0.0, sum_nf = 0.0;

  for (std::size_t d = 0; d < spec.num_days; ++d) {
    const auto day = first_day + std::chrono::days{static_cast<int>(d)};
    const std::string date = format_date(day);
    const unsigned wd = std::chrono::weekday{day}.c_encoding();
    const bool weekend = wd == 0 || wd == 6;
    data.calendar[date] = weekend ? DayType::weekend : DayType::weekday;

    const double daily = spec.target_daily_energy() * std::clamp(1.0 + 0.04 * gauss(rng), 0.9, 1.1);
    const double flexible_target = spec.flexible_share * daily;
    const double nf_target = daily - flexible_target;

    // Flexible appliances of the day: windows, weights and usable capacity.
    struct Draft {
      std::size_t consumer;
      std::string id;
      std::vector<std::size_t> hours;  // charging order
      double cap;
      double weight;
    };
    std::vector<Draft> drafts;
    for (std::size_t n = 0; n < households.size(); ++n) {
      const auto& hh = households[n];
      int shift = std::uniform_int_distribution<int>(-1, 1)(rng);
      if (weekend && hh.ev.plug == Plug::overnight) shift -= 2;
      drafts.push_back({n, "ev", plug_hours(hh.ev, shift), hh.ev.cap, hh.ev.weight * (0.8 + 0.4 * unit(rng))});
      if (hh.furnace) {
        std::vector<std::size_t> cold;
        for (std::size_t h = 0; h < kHours; ++h) {
          if (h <= 8 || h >= 17) cold.push_back(h);
        }
        drafts.push_back({n, "furnace", cold, hh.furnace->cap, hh.furnace->weight * (0.8 + 0.4 * unit(rng))});
      }
    }
    std::vector<double> weights, caps;
    for (const auto& dr : drafts) {
      weights.push_back(dr.weight);
      caps.push_back(spec.max_fill * dr.cap * static_cast<double>(dr.hours.size()));
    }
    const auto energies = fill(weights, caps, flexible_target);

    Scenario s;
    s.day_id = date;
    s.horizon.num_hours = kHours;
    for (const auto& hh : households) s.consumers.push_back(Consumer{hh.id, {}, HourVector(kHours, 0.0)});

    double flexible_total = 0.0;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
      const auto& dr = drafts[i];
      Appliance app;
      app.id = dr.id;
      app.min_power.assign(kHours, 0.0);
      app.max_power.assign(kHours, 0.0);
      for (std::size_t h : dr.hours) app.max_power[h] = dr.cap;
      app.observed.assign(kHours, 0.0);
      if (dr.id == "ev") {
        // Uncontrolled charging: full power from arrival until the battery is done.
        double remaining = energies[i];
        for (std::size_t h : dr.hours) {
          const double x = std::min(dr.cap, remaining);
          app.observed[h] = round4(x);
          remaining -= x;
          if (remaining <= 0.0) break;
        }
      } else {
        HourVector guess(kHours, 0.0);
        double norm = 0.0;
        for (std::size_t h : dr.hours) norm += coldness(h);
        for (std::size_t h : dr.hours) guess[h] = energies[i] * coldness(h) / norm;
        const auto x = project_appliance(guess, energies[i], app.min_power, app.max_power, dr.id);
        for (std::size_t h = 0; h < kHours; ++h) app.observed[h] = std::min(round4(x[h]), app.max_power[h]);
      }
      app.energy = round4(std::accumulate(app.observed.begin(), app.observed.end(), 0.0));
      flexible_total += app.energy;
      s.consumers[dr.consumer].appliances.push_back(std::move(app));
    }

    // Nonflexible load: household scale times a two-peak daily shape, with noise.
    std::vector<HourVector> raw(households.size(), HourVector(kHours));
    double raw_total = 0.0;
    for (std::size_t n = 0; n < households.size(); ++n) {
      for (std::size_t h = 0; h < kHours; ++h) {
        const double noise = std::max(0.2, 1.0 + 0.15 * gauss(rng));
        raw[n][h] = households[n].nf_weight * nonflexible_shape(h, weekend) * noise;
        raw_total += raw[n][h];
      }
    }
    double nf_total = 0.0;
    for (std::size_t n = 0; n < households.size(); ++n) {
      for (std::size_t h = 0; h < kHours; ++h) {
        s.consumers[n].nonflexible[h] = round4(raw[n][h] * nf_target / raw_total);
        nf_total += s.consumers[n].nonflexible[h];
      }
    }
    s.cost_model = flexible_cost_model(data.base_cost, s.nonflexible_total());

    for (const auto& c : s.consumers) {
      auto& nf = series[{c.id, kNonflexibleId}];
      nf.consumer_id = c.id;
      nf.appliance_id = kNonflexibleId;
      nf.days[date] = c.nonflexible;
      for (const auto& a : c.appliances) {
        auto& ser = series[{c.id, a.id}];
        ser.consumer_id = c.id;
        ser.appliance_id = a.id;
        ser.days[date] = a.observed;
      }
    }

    sum_total += flexible_total + nf_total;
    sum_share += flexible_total / (flexible_total + nf_total);
    sum_nf += nf_total / static_cast<double>(kHours);
    data.days.push_back(std::move(s));
  }

  for (auto& [key, ser] : series) data.history.series.push_back(std::move(ser));
  const double days = static_cast<double>(spec.num_days);
  data.stats = {sum_total / days, sum_share / days, sum_nf / days};
  return data;
}

}  // namespace dsm
