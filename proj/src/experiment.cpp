#include "dsm/experiment.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "dsm/history.hpp"
#include "dsm/scenario_io.hpp"

namespace dsm {

namespace fs = std::filesystem;

namespace {

using nlohmann::json;

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (v == 0.0) return "0";
  return fmt::format("{:.12g}", v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvFile {
 public:
  CsvFile(const fs::path& path, std::string_view header) : out_(path, std::ios::binary) {
    if (!out_) throw Error(fmt::format("cannot write {}", path.string()));
    out_ << header << '\n';
  }
  void row(const std::string& line) { out_ << line << '\n'; }

 private:
  std::ofstream out_;
};

double get_number(const json& j, std::string_view what) {
  if (!j.is_number()) throw InvalidInputError(fmt::format("{}: expected a number", what));
  return j.get<double>();
}

HourVector get_numbers(const json& j, std::string_view what) {
  if (!j.is_array()) throw InvalidInputError(fmt::format("{}: expected an array of numbers", what));
  HourVector out;
  for (const auto& v : j) out.push_back(get_number(v, what));
  return out;
}

HourVector coefficient(const json& cost, const char* key, std::size_t hours) {
  if (!cost.contains(key)) throw InvalidInputError(fmt::format("cost_model: missing '{}'", key));
  const auto& j = cost.at(key);
  if (j.is_array()) return get_numbers(j, key);
  return HourVector(hours, get_number(j, key));
}

void read_tariff(const json& doc, Scenario& tariff) {
  if (doc.contains("peak")) {
    const auto& peak = doc.at("peak");
    if (peak.contains("hours")) tariff.peak_hours = peak.at("hours").get<std::vector<std::size_t>>();
    if (peak.contains("price_ratio")) tariff.peak_price_ratio = get_number(peak.at("price_ratio"), "peak.price_ratio");
    if (peak.contains("offpeak_price")) {
      tariff.offpeak_price = get_number(peak.at("offpeak_price"), "peak.offpeak_price");
    }
  }
  if (doc.contains("baseline_price")) tariff.baseline_price = get_number(doc.at("baseline_price"), "baseline_price");
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec spec;
  if (!j.is_object()) throw InvalidInputError("synthetic: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "num_consumers") {
      spec.num_consumers = value.get<std::size_t>();
    } else if (key == "num_days") {
      spec.num_days = value.get<std::size_t>();
    } else if (key == "start_date") {
      spec.start_date = value.get<std::string>();
    } else if (key == "daily_energy") {
      spec.daily_energy = get_number(value, key);
    } else if (key == "flexible_share") {
      spec.flexible_share = get_number(value, key);
    } else if (key == "mean_nonflexible") {
      spec.mean_nonflexible = get_number(value, key);
    } else if (key == "furnaces") {
      spec.furnaces = value.get<bool>();
    } else if (key == "max_fill") {
      spec.max_fill = get_number(value, key);
    } else if (key == "ev_caps") {
      spec.ev_caps = get_numbers(value, key);
    } else if (key == "seed") {
      spec.seed = value.get<std::uint64_t>();
    } else {
      throw InvalidInputError(fmt::format("synthetic: unknown field '{}'", key));
    }
  }
  return spec;
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInputError(fmt::format("invalid {} JSON: {}", what, e.what()));
  }
}

std::string_view step_rule_name(StepRule r) { return r == StepRule::fixed ? "fixed" : "backtracking"; }
std::string_view order_name(PlayerOrder o) { return o == PlayerOrder::random ? "random" : "round_robin"; }

bool is_brd(Mechanism m) { return m == Mechanism::DP || m == Mechanism::HP; }

}  // namespace

std::string RunConfig::settings_text() const {
  return fmt::format("tolerance={};max_iterations={};step_rule={};order={};epsilon={};max_rounds={}",
                     num(solve.tolerance), solve.max_iterations, step_rule_name(solve.step_rule),
                     order_name(brd.order), num(brd.epsilon), brd.max_rounds);
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  const json doc = parse_json(json_text, "config");
  if (!doc.is_object()) throw InvalidInputError("config: expected an object");
  RunConfig c;
  auto resolve = [&](const json& j) {
    fs::path p = j.get<std::string>();
    return p.is_relative() ? base_dir / p : p;
  };
  try {
    int sources = 0;
    if (doc.contains("scenarios")) {
      ++sources;
      for (const auto& p : doc.at("scenarios")) c.scenario_paths.push_back(resolve(p));
      if (c.scenario_paths.empty()) throw InvalidInputError("config: 'scenarios' is empty");
    }
    if (doc.contains("history") || doc.contains("calendar")) {
      ++sources;
      if (!doc.contains("history") || !doc.contains("calendar")) {
        throw InvalidInputError("config: 'history' and 'calendar' go together");
      }
      c.history_path = resolve(doc.at("history"));
      c.calendar_path = resolve(doc.at("calendar"));
      if (doc.contains("days")) c.days = doc.at("days").get<std::vector<std::string>>();
      if (doc.contains("cost_model")) {
        const auto& cost = doc.at("cost_model");
        c.base_cost = CostModel{coefficient(cost, "a2", 24), coefficient(cost, "a1", 24), coefficient(cost, "a0", 24)};
      }
    }
    if (doc.contains("synthetic")) {
      ++sources;
      c.synthetic = synthetic_from_json(doc.at("synthetic"));
    }
    if (sources > 1) throw InvalidInputError("config: give exactly one of scenarios, history/calendar, synthetic");
    read_tariff(doc, c.tariff);

    if (doc.contains("mechanisms")) {
      c.mechanisms.clear();
      for (const auto& m : doc.at("mechanisms")) c.mechanisms.push_back(parse_mechanism(m.get<std::string>()));
      if (c.mechanisms.empty()) throw InvalidInputError("config: 'mechanisms' is empty");
    }
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("solver")) {
      const auto& s = doc.at("solver");
      if (s.contains("tolerance")) c.solve.tolerance = get_number(s.at("tolerance"), "solver.tolerance");
      if (s.contains("max_iterations")) c.solve.max_iterations = s.at("max_iterations").get<int>();
      if (s.contains("step_rule")) {
        const auto rule = s.at("step_rule").get<std::string>();
        if (rule == "fixed") {
          c.solve.step_rule = StepRule::fixed;
        } else if (rule == "backtracking") {
          c.solve.step_rule = StepRule::backtracking;
        } else {
          throw InvalidInputError(fmt::format("solver.step_rule: unknown value '{}'", rule));
        }
      }
    }
    if (doc.contains("brd")) {
      const auto& b = doc.at("brd");
      if (b.contains("order")) {
        const auto order = b.at("order").get<std::string>();
        if (order == "random") {
          c.brd.order = PlayerOrder::random;
        } else if (order == "round_robin") {
          c.brd.order = PlayerOrder::round_robin;
        } else {
          throw InvalidInputError(fmt::format("brd.order: unknown value '{}'", order));
        }
      }
      if (b.contains("epsilon")) c.brd.epsilon = get_number(b.at("epsilon"), "brd.epsilon");
      if (b.contains("max_rounds")) c.brd.max_rounds = b.at("max_rounds").get<int>();
    }
    if (doc.contains("sweep")) {
      const auto& sw = doc.at("sweep");
      if (sw.contains("factors")) c.sweep_factors = get_numbers(sw.at("factors"), "sweep.factors");
      if (sw.contains("day")) c.sweep_day = sw.at("day").get<std::string>();
    }
    if (doc.contains("load_cap")) c.load_cap = get_numbers(doc.at("load_cap"), "load_cap");
  } catch (const json::exception& e) {
    throw InvalidInputError(fmt::format("malformed config: {}", e.what()));
  }
  c.solve.validate();
  c.brd.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  try {
    return parse_run_config(read_text_file(path), path.parent_path());
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<Scenario> load_days(const RunConfig& config) {
  std::vector<Scenario> days;
  if (!config.scenario_paths.empty()) {
    for (const auto& p : config.scenario_paths) {
      days.push_back(load_scenario(p));
      if (days.back().day_id.empty()) days.back().day_id = p.stem().string();
    }
  } else if (config.history_path) {
    const auto history = load_history(*config.history_path);
    const auto calendar = load_calendar(*config.calendar_path);
    std::vector<std::string> dates = config.days;
    if (dates.empty()) {
      for (const auto& [date, type] : calendar) dates.push_back(date);
    }
    for (const auto& date : dates) days.push_back(day_scenario(history, calendar, date, config.base_cost, config.tariff).scenario);
  } else if (config.synthetic) {
    auto data = generate_synthetic(*config.synthetic);
    for (auto& s : data.days) {
      s.peak_hours = config.tariff.peak_hours;
      s.peak_price_ratio = config.tariff.peak_price_ratio;
      s.offpeak_price = config.tariff.offpeak_price;
      s.baseline_price = config.tariff.baseline_price;
      days.push_back(std::move(s));
    }
  } else {
    throw InvalidInputError("config: no day source (scenarios, history/calendar or synthetic)");
  }
  if (days.empty()) throw InvalidInputError("config: the day set is empty");

  for (const auto& s : days) {
    const auto violations = validate_scenario(s);
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw InvalidInputError(fmt::format("day {}: {}: {} ({}){}", s.day_id, v.entity, v.invariant, v.detail,
                                          violations.size() > 1
                                              ? fmt::format(" and {} more violation(s)", violations.size() - 1)
                                              : std::string()));
    }
  }
  if (config.load_cap && config.load_cap->size() != days.front().num_hours()) {
    throw InvalidInputError("config: load_cap must have num_hours values");
  }
  return days;
}

std::uint64_t day_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer over seed and day index
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DayResult evaluate_day(const Scenario& s, const RunConfig& config, std::uint64_t seed) {
  DayResult out;
  out.day_id = s.day_id;
  out.seed = seed;
  out.nonflexible = s.nonflexible_total();
  for (const auto& c : s.consumers) out.consumer_ids.push_back(c.id);
  try {
    out.externalities = externalities(s, config.solve);
  } catch (const Error& e) {
    throw Error(fmt::format("day {}: externalities: {}", s.day_id, e.what()));
  }
  const auto& ext = out.externalities;
  const LoadProfile start = initial_profile(s);
  const HourVector cap = config.load_cap ? *config.load_cap : default_load_cap(s);

  for (const Mechanism m : config.mechanisms) {
    MechanismRun run;
    BillVector bills;
    try {
      switch (m) {
        case Mechanism::DP:
        case Mechanism::HP: {
          BrdSettings brd = config.brd;
          brd.seed = seed;
          brd.trace = config.trace;
          auto eq = run_brd(s, m, brd, config.solve, start);
          run.profile = std::move(eq.profile);
          bills = std::move(eq.bills);
          run.converged = eq.converged;
          run.rounds = eq.rounds;
          run.best_responses = eq.total_best_responses;
          run.trace = std::move(eq.trace);
          break;
        }
        case Mechanism::Baseline:
          run.profile = observed_profile(s);
          bills = bill_baseline(run.profile, s.baseline_price);
          break;
        case Mechanism::PeakOff:
          run.profile = greedy_offpeak_shift(observed_profile(s), s, seed);
          bills = bill_peak_offpeak(run.profile, s, s.offpeak_price);
          break;
        case Mechanism::VCG:
        case Mechanism::FairRef: {
          run.profile = ext.optimum;
          auto ref = bill_fair_reference(run.profile, s, ext.values, ext.optimum_cost);
          bills = m == Mechanism::VCG ? std::move(ref.vcg) : std::move(ref.fair);
          break;
        }
      }
      auto& r = run.metrics;
      r.day_id = s.day_id;
      r.mechanism = m;
      r.social_cost = social_cost(run.profile, s);
      r.optimum_cost = ext.optimum_cost;
      r.poa = price_of_anarchy(r.social_cost, r.optimum_cost);
      r.poa_bound = std::nan("");
      if (m == Mechanism::HP) {
        r.poa_bound = smoothness_certificate(s, cap).poa_bound;
        run.unique = check_uniqueness(run.profile, s).holds;
      }
      r.fairness_index = fairness_index(bills, ext.values);
      r.externalities = ext.values;
      r.bills = bills.bills;
    } catch (const Error& e) {
      throw Error(fmt::format("day {}, mechanism {}: {}", s.day_id, to_string(m), e.what()));
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<DayResult>& days, std::span<const Mechanism> mechanisms) {
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < mechanisms.size(); ++i) {
    SummaryRow row;
    row.mechanism = mechanisms[i];
    std::vector<double> poa, fairness;
    double br = 0.0;
    for (const auto& d : days) {
      const auto& run = d.runs.at(i);
      poa.push_back(100.0 * (run.metrics.poa - 1.0));
      fairness.push_back(100.0 * run.metrics.fairness_index);
      br += static_cast<double>(run.best_responses) / static_cast<double>(run.metrics.bills.size());
    }
    row.days = days.size();
    row.poa_minus_1_pct = mean_std(poa);
    row.fairness_pct = mean_std(fairness);
    row.best_responses_per_consumer = is_brd(row.mechanism) && !days.empty()
                                          ? br / static_cast<double>(days.size())
                                          : std::nan("");
    rows.push_back(row);
  }
  return rows;
}

SimulationResult simulate(const std::vector<Scenario>& days, const RunConfig& config) {
  SimulationResult out;
  for (std::size_t d = 0; d < days.size(); ++d) out.days.push_back(evaluate_day(days[d], config, day_seed(config.seed, d)));
  out.summary = summarize(out.days, config.mechanisms);
  return out;
}

void write_results(const SimulationResult& result, const RunConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string settings = csv_field(config.settings_text());
  {
    CsvFile f(out_dir / "metrics.csv",
              "day_id,mechanism,social_cost,optimum_cost,poa,poa_minus_1,poa_bound,fairness_index,converged,rounds,"
              "best_responses,unique,seed,settings");
    for (const auto& d : result.days) {
      for (const auto& run : d.runs) {
        const auto& r = run.metrics;
        f.row(fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}", csv_field(d.day_id), to_string(r.mechanism),
                          num(r.social_cost), num(r.optimum_cost), num(r.poa), num(r.poa - 1.0), num(r.poa_bound),
                          num(r.fairness_index), run.converged ? 1 : 0, run.rounds, run.best_responses,
                          run.unique ? (*run.unique ? "1" : "0") : "", d.seed, settings));
      }
    }
  }
  {
    CsvFile f(out_dir / "bills.csv", "day_id,mechanism,consumer,bill,externality,seed");
    for (const auto& d : result.days) {
      for (const auto& run : d.runs) {
        for (std::size_t n = 0; n < run.metrics.bills.size(); ++n) {
          f.row(fmt::format("{},{},{},{},{},{}", csv_field(d.day_id), to_string(run.metrics.mechanism),
                            csv_field(d.consumer_ids[n]), num(run.metrics.bills[n]),
                            num(run.metrics.externalities[n]), d.seed));
        }
      }
    }
  }
  {
    CsvFile f(out_dir / "summary.csv",
              "mechanism,days,poa_minus_1_pct_mean,poa_minus_1_pct_std,fairness_pct_mean,fairness_pct_std,"
              "best_responses_per_consumer,seed,settings");
    for (const auto& row : result.summary) {
      f.row(fmt::format("{},{},{},{},{},{},{},{},{}", to_string(row.mechanism), row.days,
                        num(row.poa_minus_1_pct.mean), num(row.poa_minus_1_pct.stddev), num(row.fairness_pct.mean),
                        num(row.fairness_pct.stddev), num(row.best_responses_per_consumer), config.seed, settings));
    }
  }
  if (config.trace) {
    CsvFile f(out_dir / "trace.csv", "day_id,mechanism,iteration,consumer,bill_before,bill_after,aggregate,seed");
    for (const auto& d : result.days) {
      for (const auto& run : d.runs) {
        for (const auto& t : run.trace) {
          std::string agg;
          for (std::size_t h = 0; h < t.aggregate.size(); ++h) agg += (h ? ";" : "") + num(t.aggregate[h]);
          f.row(fmt::format("{},{},{},{},{},{},{},{}", csv_field(d.day_id), to_string(run.metrics.mechanism),
                            t.iteration, csv_field(d.consumer_ids[t.consumer]), num(t.bill_before),
                            num(t.bill_after), agg, d.seed));
        }
      }
    }
  }
  export_plot_data(result, config, out_dir);
}

void export_plot_data(const SimulationResult& result, const RunConfig&, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  {
    CsvFile f(out_dir / "loads.csv", "day_id,mechanism,hour,nonflexible,flexible,total,seed");
    for (const auto& d : result.days) {
      for (const auto& run : d.runs) {
        const auto flexible = run.profile.aggregate();
        for (std::size_t h = 0; h < flexible.size(); ++h) {
          f.row(fmt::format("{},{},{},{},{},{},{}", csv_field(d.day_id), to_string(run.metrics.mechanism), h,
                            num(d.nonflexible[h]), num(flexible[h]), num(d.nonflexible[h] + flexible[h]), d.seed));
        }
      }
    }
  }
  {
    CsvFile f(out_dir / "scatter.csv", "day_id,mechanism,poa_minus_1,fairness_index,seed");
    for (const auto& d : result.days) {
      for (const auto& run : d.runs) {
        f.row(fmt::format("{},{},{},{},{}", csv_field(d.day_id), to_string(run.metrics.mechanism),
                          num(run.metrics.poa - 1.0), num(run.metrics.fairness_index), d.seed));
      }
    }
  }
}

void write_sweep(const SweepResult& sweep, const RunConfig& config, const std::string& day_id, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  CsvFile f(out_dir / "sweep.csv", "day_id,factor,mechanism,feasible,fairness_index,poa,diagnostic,seed,settings");
  const std::string settings = csv_field(config.settings_text());
  for (const auto& e : sweep.entries) {
    f.row(fmt::format("{},{},{},{},{},{},{},{},{}", csv_field(day_id), num(e.factor), to_string(e.mechanism),
                      e.feasible ? 1 : 0, e.feasible ? num(e.fairness_index) : "", e.feasible ? num(e.poa) : "",
                      csv_field(e.diagnostic), config.seed, settings));
  }
}

std::string format_summary(std::span<const SummaryRow> rows) {
  std::string out = fmt::format("{:<10} {:>6} {:>24} {:>24} {:>10}\n", "mechanism", "days", "PoA-1 % mean (std)",
                                "F % mean (std)", "BR/user");
  for (const auto& r : rows) {
    out += fmt::format("{:<10} {:>6} {:>24} {:>24} {:>10}\n", to_string(r.mechanism), r.days,
                       fmt::format("{:.4f} ({:.4f})", r.poa_minus_1_pct.mean, r.poa_minus_1_pct.stddev),
                       fmt::format("{:.4f} ({:.4f})", r.fairness_pct.mean, r.fairness_pct.stddev),
                       std::isnan(r.best_responses_per_consumer)
                           ? std::string("-")
                           : fmt::format("{:.2f}", r.best_responses_per_consumer));
  }
  return out;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
  const json doc = parse_json(json_text, "generator");
  try {
    SyntheticSpec spec = synthetic_from_json(doc.contains("synthetic") ? doc.at("synthetic") : doc);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw InvalidInputError(fmt::format("malformed generator spec: {}", e.what()));
  }
}

void write_synthetic(const SyntheticData& data, const SyntheticSpec& spec, const fs::path& out_dir) {
  fs::create_directories(out_dir / "scenarios");
  {
    std::ofstream f(out_dir / "history.csv", std::ios::binary);
    f << format_history(data.history);
  }
  {
    std::ofstream f(out_dir / "calendar.csv", std::ios::binary);
    f << format_calendar(data.calendar);
  }
  json config;
  config["scenarios"] = json::array();
  for (const auto& s : data.days) {
    const std::string name = fmt::format("scenarios/{}.json", s.day_id);
    save_scenario(out_dir / name, s, &data.base_cost);
    config["scenarios"].push_back(name);
  }
  config["mechanisms"] = {"DP", "HP", "Baseline", "PeakOff"};
  config["seed"] = spec.seed;
  {
    std::ofstream f(out_dir / "simulate.json", std::ios::binary);
    f << config.dump(2) << '\n';
  }
  const double target_energy = spec.target_daily_energy();
  const double target_nf = target_energy * (1.0 - spec.flexible_share) / 24.0;
  CsvFile f(out_dir / "generation_summary.csv", "statistic,target,achieved,relative_error");
  auto line = [&](std::string_view name, double target, double achieved) {
    f.row(fmt::format("{},{},{},{}", name, num(target), num(achieved), num((achieved - target) / target)));
  };
  line("mean_daily_energy", target_energy, data.stats.mean_daily_energy);
  line("flexible_share", spec.flexible_share, data.stats.flexible_share);
  line("mean_nonflexible", target_nf, data.stats.mean_nonflexible);
}

}  // namespace dsm
