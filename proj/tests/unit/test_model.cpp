#include <doctest.h>

#include <random>

#include "dsm/model.hpp"
#include "dsm/qpsolve.hpp"
#include "support/builders.hpp"

using namespace dsm;
using namespace dsm::testing;

namespace {

Scenario two_consumers() {
  return scenario({consumer("a", {box_appliance("ev", 3.0, 4, 0.0, 2.0)}, 4),
                   consumer("b", {box_appliance("ev", 1.0, 4, 0.0, 1.0), box_appliance("heat", 2.0, 4, 0.5, 1.0)}, 4)},
                  CostModel::uniform(4, 0.04, 8.0, 0.0));
}

bool has_violation(const std::vector<Violation>& v, std::string_view invariant) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.invariant == invariant; });
}

}  // namespace

TEST_CASE("well-formed scenario has no violations") {
  CHECK(validate_scenario(two_consumers()).empty());
}

TEST_CASE("energy above the power bounds is reported once") {
  auto s = two_consumers();
  auto& app = s.consumers[0].appliances[0];
  app.energy = app.max_total() + 1.0;
  const auto v = validate_scenario(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].invariant == "sum(min_power) <= energy <= sum(max_power)");
  CHECK(v[0].entity == "appliance a/ev");
}

TEST_CASE("inverted bounds are reported at their hour") {
  Scenario s = scenario({consumer("a", {box_appliance("ev", 2.0, 5, 0.0, 3.0)}, 5)}, CostModel::uniform(5, 1, 0, 0));
  s.consumers[0].appliances[0].min_power[3] = 2.0;
  s.consumers[0].appliances[0].max_power[3] = 1.0;
  const auto v = validate_scenario(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].invariant == "min_power <= max_power");
  CHECK(v[0].detail.find("hour 3") != std::string::npos);
}

TEST_CASE("scenario invariants") {
  auto s = two_consumers();
  SUBCASE("a2 must be positive") {
    s.cost_model.a2[1] = 0.0;
    CHECK(has_violation(validate_scenario(s), "a2 > 0"));
  }
  SUBCASE("negative a1") {
    s.cost_model.a1[0] = -1.0;
    CHECK(has_violation(validate_scenario(s), "a1 >= 0"));
  }
  SUBCASE("peak hour outside the horizon") {
    s.peak_hours = {4};
    CHECK(has_violation(validate_scenario(s), "peak hours inside the horizon"));
  }
  SUBCASE("peak ratio below one") {
    s.peak_price_ratio = 0.9;
    CHECK(has_violation(validate_scenario(s), "price_ratio >= 1"));
  }
  SUBCASE("duplicate consumer") {
    s.consumers[1].id = "a";
    CHECK(has_violation(validate_scenario(s), "unique consumer id"));
  }
  SUBCASE("negative nonflexible load") {
    s.consumers[0].nonflexible[2] = -0.1;
    CHECK(has_violation(validate_scenario(s), "nonflexible >= 0"));
  }
  SUBCASE("vector length") {
    s.consumers[0].appliances[0].max_power.pop_back();
    CHECK(has_violation(validate_scenario(s), "max_power has one value per hour"));
  }
  SUBCASE("observed schedule must meet the energy") {
    s.consumers[0].appliances[0].observed = {1.0, 1.0, 0.0, 0.0};
    CHECK(has_violation(validate_scenario(s), "observed schedule meets the energy requirement"));
  }
  SUBCASE("observed schedule within bounds") {
    s.consumers[0].appliances[0].observed = {3.0, 0.0, 0.0, 0.0};
    CHECK(has_violation(validate_scenario(s), "observed within power bounds"));
  }
}

TEST_CASE("flexible cost of the total-load cost") {
  const CostModel base = CostModel::uniform(3, 0.04, 8.0, 0.1);
  SUBCASE("no nonflexible load") {
    const auto c = flexible_cost_model(base, HourVector{0.0, 0.0, 0.0});
    CHECK(c.a2[0] == doctest::Approx(0.04));
    CHECK(c.a1[0] == doctest::Approx(8.0));
    CHECK(c.a0[0] == 0.0);
  }
  SUBCASE("a1 shifts by 2 a2 l_NF") {
    const auto c = flexible_cost_model(base, HourVector{10.0, 0.0, 0.0});
    CHECK(c.a1[0] == doctest::Approx(8.8));
    CHECK(c.a1[1] == doctest::Approx(8.0));
    CHECK_FALSE(c.has_constant_term());
  }
  SUBCASE("matches the cost difference pointwise") {
    const CostModel unit = CostModel::uniform(1, 1.0, 0.0, 5.0);
    const auto c = flexible_cost_model(unit, HourVector{3.0});
    CHECK(c.a2[0] == 1.0);
    CHECK(c.a1[0] == 6.0);
    CHECK(c.a0[0] == 0.0);
    for (double l : {0.0, 0.5, 1.0, 2.5, 7.0}) {
      const double direct = unit.cost(0, 3.0 + l) - unit.cost(0, 3.0);
      CHECK(c.cost(0, l) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  SUBCASE("negative nonflexible load is rejected") {
    CHECK_THROWS_AS(flexible_cost_model(base, HourVector{0.0, -1.0, 0.0}), InvalidInputError);
  }
}

TEST_CASE("flexible cost never has a constant term") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int t = 0; t < 50; ++t) {
    HourVector nf(24);
    for (double& x : nf) x = u(rng);
    const auto c = flexible_cost_model(CostModel::uniform(24, 0.04, 8.0, u(rng)), nf);
    CHECK_FALSE(c.has_constant_term());
  }
}

TEST_CASE("load profile sums") {
  const auto s = two_consumers();
  LoadProfile p(s);
  CHECK(p.num_consumers() == 2);
  CHECK(p.num_appliances(1) == 2);
  p.at(0, 0, 1) = 2.0;
  p.at(1, 0, 1) = 1.0;
  p.at(1, 1, 3) = 0.5;
  CHECK(p.consumer_load(1) == HourVector{0.0, 1.0, 0.0, 0.5});
  CHECK(p.aggregate() == HourVector{0.0, 3.0, 0.0, 0.5});
  CHECK(p.consumer_energy(1) == doctest::Approx(1.5));
  CHECK(p.consumer_block(1).size() == 8);
}

TEST_CASE("feasibility check") {
  const auto s = two_consumers();
  LoadProfile p(s);
  for (std::size_t h = 0; h < 4; ++h) {
    p.at(0, 0, h) = 0.75;
    p.at(1, 0, h) = 0.25;
    p.at(1, 1, h) = 0.5;
  }
  CHECK(is_feasible(p, s));
  p.at(1, 1, 0) = 0.4;  // below min_power, energy short too
  const auto v = check_feasibility(p, s);
  CHECK(v.size() == 2);
  CHECK(has_violation(v, "power within bounds"));
  CHECK(has_violation(v, "daily energy met"));
}

TEST_CASE("every validated appliance admits a feasible schedule") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto s = random_scenario(rng);
    REQUIRE(validate_scenario(s).empty());
    LoadProfile p(s);
    for (std::size_t n = 0; n < s.num_consumers(); ++n) {
      for (std::size_t a = 0; a < s.consumers[n].appliances.size(); ++a) {
        const auto& app = s.consumers[n].appliances[a];
        const auto x = project_appliance(app.min_power, app.energy, app.min_power, app.max_power, app.id);
        std::copy(x.begin(), x.end(), p.appliance(n, a).begin());
      }
    }
    CHECK(is_feasible(p, s));
  }
}

TEST_CASE("scenario transformations") {
  const auto s = two_consumers();
  SUBCASE("scaling max power") {
    const auto t = scale_max_power(s, 2.0);
    CHECK(t.consumers[1].appliances[1].max_power[0] == 2.0);
    CHECK(t.consumers[1].appliances[1].min_power[0] == 0.5);
    CHECK(scale_max_power(s, 1.0).consumers[0].appliances[0].max_power == s.consumers[0].appliances[0].max_power);
  }
  SUBCASE("removing a consumer") {
    const auto t = without_consumer(s, 0);
    REQUIRE(t.num_consumers() == 1);
    CHECK(t.consumers[0].id == "b");
    CHECK(t.total_energy() == doctest::Approx(3.0));
  }
  SUBCASE("observed profile requires schedules") {
    CHECK_THROWS_AS(observed_profile(s), InvalidInputError);
  }
}

TEST_CASE("mechanism names round-trip") {
  for (auto m : {Mechanism::DP, Mechanism::HP, Mechanism::Baseline, Mechanism::PeakOff, Mechanism::VCG,
                 Mechanism::FairRef}) {
    CHECK(parse_mechanism(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_mechanism("XP"), InvalidInputError);
}
