#pragma once

// Scenario files: a JSON document with sections `horizon`, `cost_model`,
// `peak` and `consumers`. Numbers must be written in plain decimal notation.
//
//   {
//     "day_id": "2016-01-02",                      (optional)
//     "horizon": {"num_hours": 24},
//     "cost_model": {"applies_to": "total_load",   (or "flexible_load", the default)
//                    "a2": 0.04, "a1": 8, "a0": 0.1},  (scalar or one value per hour)
//     "peak": {"hours": [7, 8, 17, 18, 19, 20], "price_ratio": 2.84,
//              "offpeak_price": 8.5},              (all optional)
//     "baseline_price": 8.5,                       (optional)
//     "consumers": [
//       {"id": "c01", "nonflexible": [24 values],
//        "appliances": [{"id": "ev", "energy": 6.6,
//                        "min_power": [24 values], "max_power": [24 values],
//                        "observed": [24 values]}]}   (observed optional)
//     ]
//   }
//
// With "applies_to": "total_load" the coefficients describe the cost of the
// total load and the flexible-load cost is derived from the consumers'
// summed nonflexible load.

#include <filesystem>
#include <string>
#include <string_view>

#include "dsm/model.hpp"

namespace dsm {

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Parses "[+-]digits[.digits]" (or ".digits"); anything else, including
/// exponents, inf and nan, is a ParseError.
double parse_decimal(std::string_view text);

/// Fixed-point rendering with at most `digits` decimals, trailing zeros removed.
std::string format_decimal(double value, int digits = 6);

Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Inverse of parse_scenario. When `base_cost` is given the file records it
/// with "applies_to": "total_load"; otherwise the flexible cost is written
/// per hour.
std::string format_scenario(const Scenario& s, const CostModel* base_cost = nullptr, int digits = 6);
void save_scenario(const std::filesystem::path& path, const Scenario& s, const CostModel* base_cost = nullptr);

/// Reads a whole file; throws Error when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dsm
