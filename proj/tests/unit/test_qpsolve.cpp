#include <doctest.h>

#include <random>

#include "dsm/qpsolve.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace dsm;
using namespace dsm::testing;

TEST_CASE("projection examples") {
  CHECK(project_appliance(HourVector{5, 5}, 4, HourVector{0, 0}, HourVector{10, 10}) == HourVector{2, 2});
  CHECK(project_appliance(HourVector{10, 0}, 4, HourVector{0, 0}, HourVector{3, 3}) == HourVector{3, 1});
  const HourVector lo{0.5, 1.0, 0.0};
  CHECK(project_appliance(HourVector{7, -2, 3}, 1.5, lo, HourVector{2, 2, 2}) == lo);
  const HourVector hi{0.5, 1.0, 0.25};
  CHECK(project_appliance(HourVector{0, 0, 0}, 1.75, HourVector{0, 0, 0}, hi) == hi);
}

TEST_CASE("projection of an empty set names the appliance") {
  try {
    project_appliance(HourVector{0, 0}, 5, HourVector{0, 0}, HourVector{2, 2}, "c7/ev");
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("c7/ev") != std::string::npos);
  }
}

TEST_CASE("projection agrees with the bisection oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t H = 1 + t % 24;
    HourVector v(H), lo(H), hi(H);
    for (std::size_t h = 0; h < H; ++h) {
      v[h] = 20.0 * u(rng) - 10.0;
      lo[h] = u(rng) < 0.3 ? u(rng) : 0.0;
      hi[h] = lo[h] + (u(rng) < 0.2 ? 0.0 : 5.0 * u(rng));
    }
    const double lo_sum = std::accumulate(lo.begin(), lo.end(), 0.0);
    const double hi_sum = std::accumulate(hi.begin(), hi.end(), 0.0);
    const double E = lo_sum + u(rng) * (hi_sum - lo_sum);
    const auto x = project_appliance(v, E, lo, hi);
    const auto ref = oracle::bisection_projection(v, E, lo, hi);
    CHECK(max_abs_diff(x, ref) < 1e-9);
  }
}

TEST_CASE("social optimum of symmetric hours") {
  const auto s = scenario({consumer("c", {box_appliance("ev", 2, 2, 0, 2)}, 2)}, pure_quadratic({1, 1}));
  const auto out = social_optimum(s, {});
  CHECK(out.converged);
  CHECK(out.solution.at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(out.solution.at(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(out.objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("social optimum equalizes marginal costs") {
  const auto s = scenario({consumer("c", {box_appliance("ev", 2, 2, 0, 2)}, 2)}, pure_quadratic({1, 2}));
  const auto out = social_optimum(s, {});
  CHECK(out.converged);
  CHECK(out.solution.at(0, 0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-7));
  CHECK(out.solution.at(0, 0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK(out.objective == doctest::Approx(8.0 / 3.0).epsilon(1e-9));
  const auto grid = oracle::grid_social_optimum(s);
  CHECK(out.objective == doctest::Approx(grid.value).epsilon(1e-6));
}

TEST_CASE("pinned appliances need no descent") {
  auto s = scenario({consumer("c", {box_appliance("ev", 4, 2, 0, 2), box_appliance("heat", 1, 2, 0.5, 3)}, 2)},
                    pure_quadratic({1, 3}));
  const auto out = social_optimum(s, {});
  CHECK(out.converged);
  CHECK(out.iterations == 0);
  CHECK(out.solution.appliance(0, 0)[0] == 2.0);
  CHECK(out.solution.appliance(0, 1)[1] == 0.5);
}

TEST_CASE("social optimum matches the grid oracle on tiny instances") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 15; ++t) {
    const auto s = random_scenario(rng, {.min_consumers = 1, .max_consumers = 2, .hours = 3});
    const auto out = social_optimum(s, {});
    CHECK(out.converged);
    const auto grid = oracle::grid_social_optimum(s);
    CHECK(out.objective <= grid.value * (1.0 + 1e-9) + 1e-12);
    CHECK(out.objective == doctest::Approx(grid.value).epsilon(1e-3));
  }
}

TEST_CASE("both step rules reach the same optimum") {
  std::mt19937_64 rng(29);
  const auto s = random_scenario(rng, {.min_consumers = 4, .max_consumers = 4});
  SolveSettings fixed;
  fixed.step_rule = StepRule::fixed;
  fixed.max_iterations = 200000;
  const auto a = social_optimum(s, {});
  const auto b = social_optimum(s, fixed);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
}

TEST_CASE("equal marginals on interior hours of each appliance") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    const auto s = random_scenario(rng);
    const SolveSettings settings;
    const auto out = social_optimum(s, settings);
    REQUIRE(out.converged);
    const auto load = out.solution.aggregate();
    for (std::size_t n = 0; n < s.num_consumers(); ++n) {
      for (std::size_t a = 0; a < s.consumers[n].appliances.size(); ++a) {
        const auto& app = s.consumers[n].appliances[a];
        const auto row = out.solution.appliance(n, a);
        double lo = 1e300, hi = -1e300;
        for (std::size_t h = 0; h < s.num_hours(); ++h) {
          if (row[h] > app.min_power[h] + 1e-6 && row[h] < app.max_power[h] - 1e-6) {
            const double m = s.cost_model.marginal(h, load[h]);
            lo = std::min(lo, m);
            hi = std::max(hi, m);
          }
        }
        if (hi >= lo) CHECK(hi - lo <= 10.0 * settings.tolerance);
      }
    }
  }
}

TEST_CASE("single consumer best responds with the social optimum") {
  std::mt19937_64 rng(37);
  const auto s = random_scenario(rng, {.min_consumers = 1, .max_consumers = 1});
  const auto opt = social_optimum(s, {});
  const HourVector none(s.num_hours(), 0.0);
  for (auto m : {Mechanism::DP, Mechanism::HP}) {
    const auto br = best_response(0, none, m, s, {});
    CHECK(br.converged);
    CHECK(br.objective == doctest::Approx(opt.objective).epsilon(1e-8));
  }
}

TEST_CASE("HP best response avoids the loaded hour") {
  const auto s = scenario({consumer("c", {box_appliance("ev", 2, 2, 0, 2)}, 2)}, pure_quadratic({1, 1}));
  const auto br = best_response(0, HourVector{10, 0}, Mechanism::HP, s, {});
  CHECK(br.solution[0] == doctest::Approx(0.0));
  CHECK(br.solution[1] == doctest::Approx(2.0));
  CHECK(br.objective == doctest::Approx(4.0));
}

TEST_CASE("best responses move load off a congested hour") {
  const std::size_t H = 4;
  const auto s = scenario({consumer("me", {box_appliance("ev", 3, H, 0, 3)}, H),
                           consumer("them", {box_appliance("ev", 1, H, 0, 1)}, H)},
                          CostModel::uniform(H, 0.05, 1.0, 0.0));
  const HourVector others{1000, 0, 0, 0};
  for (auto m : {Mechanism::DP, Mechanism::HP}) {
    const auto br = best_response(0, others, m, s, {});
    CHECK(br.solution[0] < 1e-6);
    const auto grid = oracle::grid_best_response(s, 0, others, m == Mechanism::HP);
    CHECK(br.objective == doctest::Approx(grid.value).epsilon(1e-3));
  }
}

TEST_CASE("best response bill matches the direct bill") {
  std::mt19937_64 rng(41);
  const auto s = random_scenario(rng, {.min_consumers = 3, .max_consumers = 3});
  const auto p = random_profile(rng, s);
  const auto load = p.aggregate();
  auto others = load;
  const auto own = p.consumer_load(1);
  for (std::size_t h = 0; h < others.size(); ++h) others[h] -= own[h];
  const double total = s.total_energy();
  CHECK(response_bill(1, p.consumer_block(1), others, Mechanism::DP, s) ==
        doctest::Approx(oracle::dp_bill(s.consumers[1].total_energy(), total, s.cost_model, load)));
  CHECK(response_bill(1, p.consumer_block(1), others, Mechanism::HP, s) ==
        doctest::Approx(oracle::hp_bill(own, s.cost_model, load)));
}

TEST_CASE("no sampled deviation beats the best response") {
  std::mt19937_64 rng(43);
  const auto s = random_scenario(rng, {.min_consumers = 3, .max_consumers = 3});
  const auto p = random_profile(rng, s);
  HourVector others(s.num_hours(), 0.0);
  for (std::size_t n = 1; n < s.num_consumers(); ++n) {
    const auto l = p.consumer_load(n);
    for (std::size_t h = 0; h < others.size(); ++h) others[h] += l[h];
  }
  for (auto m : {Mechanism::DP, Mechanism::HP}) {
    const auto br = best_response(0, others, m, s, {});
    REQUIRE(br.converged);
    double best_sampled = 1e300;
    for (int k = 0; k < 1000; ++k) {
      const auto sample = random_profile(rng, s);
      const auto block = sample.consumer_block(0);
      best_sampled = std::min(best_sampled, response_bill(0, block, others, m, s));
    }
    CHECK(br.objective <= best_sampled + 1e-7);
  }
}

TEST_CASE("best response preconditions") {
  const auto s = scenario({consumer("c", {box_appliance("ev", 2, 2, 0, 2)}, 2)}, CostModel::uniform(2, 1, 0, 0.5));
  CHECK_THROWS_AS(best_response(0, HourVector{1, 1}, Mechanism::HP, s, {}), InvalidInputError);
  CHECK(best_response(0, HourVector{1, 1}, Mechanism::DP, s, {}).converged);
  CHECK_THROWS_AS(best_response(0, HourVector{-1, 1}, Mechanism::DP, s, {}), InvalidInputError);
  SolveSettings bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad = {};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
}

TEST_CASE("iteration cap is reported, not hidden") {
  std::mt19937_64 rng(47);
  const auto s = random_scenario(rng, {.min_consumers = 6, .max_consumers = 6});
  SolveSettings tight;
  tight.max_iterations = 1;
  tight.tolerance = 1e-14;
  const auto out = social_optimum(s, tight);
  CHECK_FALSE(out.converged);
  CHECK(out.residual > tight.tolerance);
  CHECK(out.iterations == 1);
}
