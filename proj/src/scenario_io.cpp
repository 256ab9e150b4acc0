#include "dsm/scenario_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace dsm {

namespace {

using nlohmann::json;

// JSON itself allows exponents; scenario files do not.
void reject_exponents(std::string_view text) {
  bool in_string = false;
  bool escaped = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') ++line;
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if ((c == 'e' || c == 'E') && i > 0 &&
               (std::isdigit(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '.')) {
      throw ParseError(fmt::format("line {}: numbers must use decimal notation (no exponent)", line));
    }
  }
}

double number(const json& j, std::string_view what) {
  if (!j.is_number()) throw ParseError(fmt::format("{}: expected a number", what));
  return j.get<double>();
}

HourVector numbers(const json& j, std::string_view what) {
  if (!j.is_array()) throw ParseError(fmt::format("{}: expected an array of numbers", what));
  HourVector out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

const json& member(const json& obj, const char* key, std::string_view where) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(fmt::format("{}: missing '{}'", where, key));
  return obj.at(key);
}

HourVector coefficient(const json& cost, const char* key, std::size_t hours) {
  const json& j = member(cost, key, "cost_model");
  if (j.is_array()) return numbers(j, fmt::format("cost_model.{}", key));
  return HourVector(hours, number(j, fmt::format("cost_model.{}", key)));
}

std::string vector_text(const HourVector& v, int digits) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_decimal(v[i], digits);
  }
  return out + "]";
}

bool all_equal(const HourVector& v) {
  for (double x : v) {
    if (x != v.front()) return false;
  }
  return !v.empty();
}

std::string coefficient_text(const HourVector& v, int digits) {
  return all_equal(v) ? format_decimal(v.front(), digits) : vector_text(v, digits);
}

}  // namespace

double parse_decimal(std::string_view text) {
  std::string_view t = text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.remove_prefix(1);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.remove_suffix(1);
  std::string_view body = t;
  if (!body.empty() && (body.front() == '+' || body.front() == '-')) body.remove_prefix(1);
  std::size_t digits = 0;
  std::size_t dots = 0;
  for (char c : body) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ++digits;
    } else if (c == '.') {
      ++dots;
    } else {
      digits = 0;
      break;
    }
  }
  if (digits == 0 || dots > 1) throw ParseError(fmt::format("'{}' is not a decimal number", text));
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value, std::chars_format::fixed);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(fmt::format("'{}' is not a decimal number", text));
  }
  return value;
}

std::string format_decimal(double value, int digits) {
  std::string out = fmt::format("{:.{}f}", value, digits);
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  if (out == "-0") out = "0";
  return out;
}

Scenario parse_scenario(std::string_view json_text) {
  reject_exponents(json_text);
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("invalid scenario JSON: {}", e.what()));
  }
  try {
    Scenario s;
    if (doc.contains("day_id")) s.day_id = doc.at("day_id").get<std::string>();
    const json& horizon = member(doc, "horizon", "scenario");
    const auto hours = member(horizon, "num_hours", "horizon");
    if (!hours.is_number_integer() || hours.get<long long>() < 1) {
      throw ParseError("horizon.num_hours must be a positive integer");
    }
    s.horizon.num_hours = hours.get<std::size_t>();
    const std::size_t num_hours = s.horizon.num_hours;

    const json& peak = doc.contains("peak") ? doc.at("peak") : json::object();
    if (peak.contains("hours")) {
      s.peak_hours.clear();
      for (const auto& h : peak.at("hours")) {
        if (!h.is_number_integer() || h.get<long long>() < 0) throw ParseError("peak.hours: expected hour indices");
        s.peak_hours.push_back(h.get<std::size_t>());
      }
    }
    if (peak.contains("price_ratio")) s.peak_price_ratio = number(peak.at("price_ratio"), "peak.price_ratio");
    if (peak.contains("offpeak_price")) s.offpeak_price = number(peak.at("offpeak_price"), "peak.offpeak_price");
    if (doc.contains("baseline_price")) s.baseline_price = number(doc.at("baseline_price"), "baseline_price");

    for (const auto& c : member(doc, "consumers", "scenario")) {
      Consumer consumer;
      consumer.id = member(c, "id", "consumer").get<std::string>();
      const std::string where = fmt::format("consumer {}", consumer.id);
      consumer.nonflexible = numbers(member(c, "nonflexible", where), where + ".nonflexible");
      for (const auto& a : member(c, "appliances", where)) {
        Appliance app;
        app.id = member(a, "id", where + " appliance").get<std::string>();
        const std::string awhere = fmt::format("appliance {}/{}", consumer.id, app.id);
        app.energy = number(member(a, "energy", awhere), awhere + ".energy");
        app.min_power = numbers(member(a, "min_power", awhere), awhere + ".min_power");
        app.max_power = numbers(member(a, "max_power", awhere), awhere + ".max_power");
        if (a.contains("observed")) app.observed = numbers(a.at("observed"), awhere + ".observed");
        consumer.appliances.push_back(std::move(app));
      }
      s.consumers.push_back(std::move(consumer));
    }

    const json& cost = member(doc, "cost_model", "scenario");
    CostModel model{coefficient(cost, "a2", num_hours), coefficient(cost, "a1", num_hours),
                    coefficient(cost, "a0", num_hours)};
    const std::string applies_to = cost.value("applies_to", std::string("flexible_load"));
    if (applies_to == "total_load") {
      if (model.a2.size() != num_hours || model.a1.size() != num_hours) {
        throw ParseError("cost_model: coefficient arrays must have num_hours values");
      }
      HourVector nf(num_hours, 0.0);
      for (const auto& consumer : s.consumers) {
        if (consumer.nonflexible.size() != num_hours) {
          throw ParseError(fmt::format("consumer {}: nonflexible must have num_hours values", consumer.id));
        }
        for (std::size_t h = 0; h < num_hours; ++h) nf[h] += consumer.nonflexible[h];
      }
      s.cost_model = flexible_cost_model(model, nf);
    } else if (applies_to == "flexible_load") {
      s.cost_model = std::move(model);
    } else {
      throw ParseError(fmt::format("cost_model.applies_to: unknown value '{}'", applies_to));
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed scenario: {}", e.what()));
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string format_scenario(const Scenario& s, const CostModel* base_cost, int digits) {
  std::string out = "{\n";
  if (!s.day_id.empty()) out += fmt::format("  \"day_id\": \"{}\",\n", s.day_id);
  out += fmt::format("  \"horizon\": {{\"num_hours\": {}}},\n", s.num_hours());
  const CostModel& cost = base_cost ? *base_cost : s.cost_model;
  out += fmt::format("  \"cost_model\": {{\"applies_to\": \"{}\", \"a2\": {}, \"a1\": {}, \"a0\": {}}},\n",
                     base_cost ? "total_load" : "flexible_load", coefficient_text(cost.a2, 12),
                     coefficient_text(cost.a1, 12), coefficient_text(cost.a0, 12));
  std::string hours;
  for (std::size_t i = 0; i < s.peak_hours.size(); ++i) hours += fmt::format("{}{}", i ? ", " : "", s.peak_hours[i]);
  out += fmt::format("  \"peak\": {{\"hours\": [{}], \"price_ratio\": {}, \"offpeak_price\": {}}},\n", hours,
                     format_decimal(s.peak_price_ratio, 12), format_decimal(s.offpeak_price, 12));
  out += fmt::format("  \"baseline_price\": {},\n", format_decimal(s.baseline_price, 12));
  out += "  \"consumers\": [";
  for (std::size_t n = 0; n < s.consumers.size(); ++n) {
    const auto& c = s.consumers[n];
    out += n ? ",\n    {" : "\n    {";
    out += fmt::format("\"id\": \"{}\",\n     \"nonflexible\": {},\n     \"appliances\": [", c.id,
                       vector_text(c.nonflexible, digits));
    for (std::size_t a = 0; a < c.appliances.size(); ++a) {
      const auto& app = c.appliances[a];
      out += a ? ",\n       {" : "\n       {";
      out += fmt::format("\"id\": \"{}\", \"energy\": {},\n        \"min_power\": {},\n        \"max_power\": {}",
                         app.id, format_decimal(app.energy, digits), vector_text(app.min_power, digits),
                         vector_text(app.max_power, digits));
      if (!app.observed.empty()) out += fmt::format(",\n        \"observed\": {}", vector_text(app.observed, digits));
      out += "}";
    }
    out += "]}";
  }
  out += "\n  ]\n}\n";
  return out;
}

void save_scenario(const std::filesystem::path& path, const Scenario& s, const CostModel* base_cost) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << format_scenario(s, base_cost);
}

}  // namespace dsm
