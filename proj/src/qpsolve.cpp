#include "dsm/qpsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace dsm {

namespace {

struct RowConstraint {
  double energy;
  std::span<const double> lo;
  std::span<const double> hi;
  std::string_view name;
};

// f(x) = sum_h quad[h] s_h^2 + lin[h] s_h + constant, with s_h the sum of
// every row at hour h.
struct HourlyQuadratic {
  HourVector quad;
  HourVector lin;
  double constant = 0.0;

  double value(std::span<const double> sums) const {
    double v = constant;
    for (std::size_t h = 0; h < sums.size(); ++h) v += (quad[h] * sums[h] + lin[h]) * sums[h];
    return v;
  }
};

void row_sums(std::span<const double> x, std::size_t hours, HourVector& sums) {
  std::fill(sums.begin(), sums.end(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) sums[i % hours] += x[i];
}

void project_rows(const std::vector<RowConstraint>& rows, std::size_t hours, std::span<const double> v,
                  std::span<double> out) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto projected =
        project_appliance(v.subspan(r * hours, hours), rows[r].energy, rows[r].lo, rows[r].hi, rows[r].name);
    std::copy(projected.begin(), projected.end(), out.begin() + static_cast<std::ptrdiff_t>(r * hours));
  }
}

// || x - P(x - g) ||_2, the gradient g being identical on every row.
double projected_gradient_norm(const std::vector<RowConstraint>& rows, std::size_t hours,
                               std::span<const double> x, std::span<const double> grad,
                               std::vector<double>& scratch, std::vector<double>& projected) {
  for (std::size_t i = 0; i < x.size(); ++i) scratch[i] = x[i] - grad[i % hours];
  project_rows(rows, hours, scratch, projected);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - projected[i];
    norm2 += d * d;
  }
  return std::sqrt(norm2);
}

SolveOutcome<std::vector<double>> minimize(const std::vector<RowConstraint>& rows, std::size_t hours,
                                           const HourlyQuadratic& f, std::vector<double> x,
                                           const SolveSettings& settings) {
  settings.validate();
  const std::size_t size = x.size();
  std::vector<double> scratch(size), trial(size), projected(size);
  HourVector sums(hours), trial_sums(hours), grad(hours), delta(hours);

  project_rows(rows, hours, x, trial);
  x.swap(trial);
  row_sums(x, hours, sums);
  auto gradient = [&](const HourVector& s, HourVector& g) {
    for (std::size_t h = 0; h < hours; ++h) g[h] = 2.0 * f.quad[h] * s[h] + f.lin[h];
  };
  gradient(sums, grad);

  SolveOutcome<std::vector<double>> out;
  out.residual = projected_gradient_norm(rows, hours, x, grad, scratch, projected);

  // Lipschitz constant of the gradient in x: rows sharing an hour add up.
  const double max_quad = f.quad.empty() ? 0.0 : *std::max_element(f.quad.begin(), f.quad.end());
  const double lipschitz = std::max(2.0 * max_quad * static_cast<double>(std::max<std::size_t>(rows.size(), 1)),
                                    std::numeric_limits<double>::min());
  const double min_step = 1e-12 / lipschitz;
  const double max_step = 1e12 / lipschitz;
  double step = 1.0 / lipschitz;

  int it = 0;
  while (out.residual > settings.tolerance && it < settings.max_iterations) {
    ++it;
    double dx2 = 0.0;
    double curvature = 0.0;
    for (;;) {
      for (std::size_t i = 0; i < size; ++i) scratch[i] = x[i] - step * grad[i % hours];
      project_rows(rows, hours, scratch, trial);
      dx2 = 0.0;
      std::fill(delta.begin(), delta.end(), 0.0);
      for (std::size_t i = 0; i < size; ++i) {
        const double d = trial[i] - x[i];
        dx2 += d * d;
        delta[i % hours] += d;
      }
      // For a quadratic, f(x+d) - f(x) - <grad, d> is exactly sum_h quad_h (ds_h)^2,
      // so the sufficient-decrease test is free of cancellation.
      curvature = 0.0;
      for (std::size_t h = 0; h < hours; ++h) curvature += f.quad[h] * delta[h] * delta[h];
      if (settings.step_rule == StepRule::fixed || curvature <= dx2 / (2.0 * step) || step <= min_step) break;
      step = std::max(0.5 * step, min_step);
    }
    x.swap(trial);
    row_sums(x, hours, sums);
    gradient(sums, grad);
    out.residual = projected_gradient_norm(rows, hours, x, grad, scratch, projected);

    if (settings.step_rule == StepRule::backtracking) {
      // Barzilai-Borwein: <s, y> = 2 sum_h quad_h (ds_h)^2.
      const double sy = 2.0 * curvature;
      step = sy > 0.0 ? std::clamp(dx2 / sy, min_step, max_step) : std::min(2.0 * step, max_step);
    }
  }

  out.iterations = it;
  out.converged = out.residual <= settings.tolerance;
  out.objective = f.value(sums);
  out.solution = std::move(x);
  return out;
}

std::vector<RowConstraint> consumer_rows(const Consumer& c) {
  std::vector<RowConstraint> rows;
  rows.reserve(c.appliances.size());
  for (const auto& a : c.appliances) rows.push_back({a.energy, a.min_power, a.max_power, a.id});
  return rows;
}

void spread_appliance(const Appliance& a, std::span<double> row) {
  const double cap = a.max_total();
  for (std::size_t h = 0; h < row.size(); ++h) row[h] = cap > 0.0 ? a.energy * a.max_power[h] / cap : 0.0;
}

double dp_share(std::size_t n, const Scenario& s) {
  const double total = s.total_energy();
  if (!(total > 0.0)) throw DegenerateError("DP billing needs a positive total energy");
  return s.consumers[n].total_energy() / total;
}

void require_no_constant(const Scenario& s, std::string_view what) {
  if (s.cost_model.has_constant_term()) {
    throw InvalidInputError(fmt::format("{} requires a0 = 0 at every hour", what));
  }
}

}  // namespace

void SolveSettings::validate() const {
  if (!(tolerance > 0.0)) throw InvalidInputError(fmt::format("solver tolerance must be > 0, got {}", tolerance));
  if (max_iterations < 1) throw InvalidInputError(fmt::format("max_iterations must be >= 1, got {}", max_iterations));
}

HourVector project_appliance(std::span<const double> v, double energy, std::span<const double> min_power,
                             std::span<const double> max_power, std::string_view name) {
  const std::size_t n = v.size();
  if (min_power.size() != n || max_power.size() != n) {
    throw InvalidInputError(fmt::format("{}: bound vectors do not match the point length", name));
  }
  const double lo_total = std::accumulate(min_power.begin(), min_power.end(), 0.0);
  const double hi_total = std::accumulate(max_power.begin(), max_power.end(), 0.0);
  const double slack = 1e-9 * std::max(1.0, std::abs(energy));
  if (energy < lo_total - slack || energy > hi_total + slack) {
    throw InfeasibleError(fmt::format("{}: energy {} outside [{}, {}]", name, energy, lo_total, hi_total));
  }
  HourVector x(n);
  if (energy <= lo_total) {
    std::copy(min_power.begin(), min_power.end(), x.begin());
    return x;
  }
  if (energy >= hi_total) {
    std::copy(max_power.begin(), max_power.end(), x.begin());
    return x;
  }

  auto clipped_sum = [&](double tau) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += std::clamp(v[i] - tau, min_power[i], max_power[i]);
    return total;
  };

  std::vector<double> breaks;
  breaks.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (max_power[i] > min_power[i]) {
      breaks.push_back(v[i] - max_power[i]);
      breaks.push_back(v[i] - min_power[i]);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // clipped_sum(breaks.front()) = hi_total > energy > lo_total = clipped_sum(breaks.back())
  std::size_t left = 0;
  std::size_t right = breaks.size() - 1;
  while (right - left > 1) {
    const std::size_t mid = left + (right - left) / 2;
    if (clipped_sum(breaks[mid]) >= energy) {
      left = mid;
    } else {
      right = mid;
    }
  }

  // On (breaks[left], breaks[right]) each coordinate is either pinned to a
  // bound or equal to v_i - tau.
  const double probe = 0.5 * (breaks[left] + breaks[right]);
  double fixed = 0.0;
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double candidate = v[i] - probe;
    if (max_power[i] <= min_power[i] || candidate <= min_power[i]) {
      fixed += min_power[i];
    } else if (candidate >= max_power[i]) {
      fixed += max_power[i];
    } else {
      free_sum += v[i];
      ++free_count;
    }
  }
  const double tau = free_count > 0 ? (free_sum + fixed - energy) / static_cast<double>(free_count) : breaks[left];
  for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(v[i] - tau, min_power[i], max_power[i]);
  return x;
}

LoadProfile initial_profile(const Scenario& s) {
  LoadProfile profile(s);
  for (std::size_t n = 0; n < s.num_consumers(); ++n) {
    const auto& c = s.consumers[n];
    for (std::size_t a = 0; a < c.appliances.size(); ++a) {
      const auto& app = c.appliances[a];
      auto row = profile.appliance(n, a);
      spread_appliance(app, row);
      const auto projected = project_appliance(row, app.energy, app.min_power, app.max_power,
                                               fmt::format("{}/{}", c.id, app.id));
      std::copy(projected.begin(), projected.end(), row.begin());
    }
  }
  return profile;
}

OptimumOutcome social_optimum(const Scenario& s, const SolveSettings& settings, const LoadProfile* start) {
  const std::size_t hours = s.num_hours();
  std::vector<RowConstraint> rows;
  for (const auto& c : s.consumers) {
    for (const auto& a : c.appliances) rows.push_back({a.energy, a.min_power, a.max_power, a.id});
  }
  HourlyQuadratic f{s.cost_model.a2, s.cost_model.a1,
                    std::accumulate(s.cost_model.a0.begin(), s.cost_model.a0.end(), 0.0)};

  LoadProfile profile = start ? *start : initial_profile(s);
  std::vector<double> x(profile.data().begin(), profile.data().end());
  auto solved = minimize(rows, hours, f, std::move(x), settings);

  for (std::size_t n = 0, r = 0; n < s.num_consumers(); ++n) {
    for (std::size_t a = 0; a < s.consumers[n].appliances.size(); ++a, ++r) {
      auto row = profile.appliance(n, a);
      std::copy_n(solved.solution.begin() + static_cast<std::ptrdiff_t>(r * hours), hours, row.begin());
    }
  }
  return OptimumOutcome{std::move(profile), solved.objective, solved.iterations, solved.residual,
                        solved.converged};
}

double response_bill(std::size_t n, std::span<const double> block, std::span<const double> others_load,
                     Mechanism mechanism, const Scenario& s) {
  const std::size_t hours = s.num_hours();
  HourVector own(hours, 0.0);
  row_sums(block, hours, own);
  const auto& cm = s.cost_model;
  switch (mechanism) {
    case Mechanism::DP: {
      double total = 0.0;
      for (std::size_t h = 0; h < hours; ++h) total += cm.cost(h, others_load[h] + own[h]);
      return dp_share(n, s) * total;
    }
    case Mechanism::HP: {
      require_no_constant(s, "HP billing");
      // (l_n / l) C(l) with a0 = 0 is l_n (a2 l + a1); zero when l_n = 0.
      double bill = 0.0;
      for (std::size_t h = 0; h < hours; ++h) {
        if (own[h] != 0.0) bill += own[h] * (cm.a2[h] * (others_load[h] + own[h]) + cm.a1[h]);
      }
      return bill;
    }
    default:
      throw InvalidInputError(fmt::format("no best response for mechanism {}", to_string(mechanism)));
  }
}

ResponseOutcome best_response(std::size_t n, std::span<const double> others_load, Mechanism mechanism,
                              const Scenario& s, const SolveSettings& settings, std::span<const double> start) {
  const std::size_t hours = s.num_hours();
  if (n >= s.num_consumers()) throw InvalidInputError(fmt::format("consumer index {} out of range", n));
  if (others_load.size() != hours) throw InvalidInputError("others_load must have one value per hour");
  for (std::size_t h = 0; h < hours; ++h) {
    if (others_load[h] < 0.0) {
      throw InvalidInputError(fmt::format("others_load at hour {} is negative ({})", h, others_load[h]));
    }
  }
  const auto& c = s.consumers[n];
  const auto& cm = s.cost_model;

  HourlyQuadratic f;
  f.quad = cm.a2;
  f.lin.resize(hours);
  double scale = 1.0;
  if (mechanism == Mechanism::DP) {
    // sum_h C_h(o_h + s_h): the bill up to the factor E_n / sum E.
    scale = dp_share(n, s);
    for (std::size_t h = 0; h < hours; ++h) {
      f.lin[h] = 2.0 * cm.a2[h] * others_load[h] + cm.a1[h];
      f.constant += cm.cost(h, others_load[h]);
    }
  } else if (mechanism == Mechanism::HP) {
    require_no_constant(s, "HP best response");
    for (std::size_t h = 0; h < hours; ++h) f.lin[h] = cm.a2[h] * others_load[h] + cm.a1[h];
  } else {
    throw InvalidInputError(fmt::format("no best response for mechanism {}", to_string(mechanism)));
  }

  std::vector<double> x(c.appliances.size() * hours);
  if (start.size() == x.size()) {
    std::copy(start.begin(), start.end(), x.begin());
  } else {
    for (std::size_t a = 0; a < c.appliances.size(); ++a) {
      spread_appliance(c.appliances[a], std::span<double>(x).subspan(a * hours, hours));
    }
  }
  auto out = minimize(consumer_rows(c), hours, f, std::move(x), settings);
  out.objective *= scale;
  return out;
}

}  // namespace dsm
