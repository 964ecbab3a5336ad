#include "geodesign/experiment_sim.hpp"

#include <cmath>

#include "geodesign/error.hpp"

namespace geodesign {

void validate_units(const PairedUnits& units) {
  const std::size_t n = units.baseline_a.size();
  if (n == 0) throw Error(ErrorCategory::data, "no pairs");
  if (units.baseline_b.size() != n || units.proxy_a.size() != n || units.proxy_b.size() != n) {
    throw Error(ErrorCategory::data, "pair-aligned vectors have mismatched lengths");
  }
  bool any_positive_pair = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double vals[] = {units.baseline_a[i], units.baseline_b[i], units.proxy_a[i],
                           units.proxy_b[i]};
    for (const double v : vals) {
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorCategory::data,
                    "pair " + std::to_string(i) + " has a negative or non-finite value");
      }
    }
    if (units.proxy_a[i] > 0.0 && units.proxy_b[i] > 0.0) any_positive_pair = true;
  }
  if (!any_positive_pair) {
    throw Error(ErrorCategory::data,
                "no pair has positive spend proxies on both sides; some assignment "
                "would receive zero total proxy");
  }
}

HoldbackDraw make_holdback_data(const PairedUnits& units, const Assignment& assignment,
                                double budget, double theta) {
  const int n = units.n_pairs();
  if (assignment.n_pairs() != n) {
    throw Error(ErrorCategory::internal, "assignment length does not match pair count");
  }
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw Error(ErrorCategory::config, "budget must be positive and finite");
  }

  double proxy_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    proxy_sum += assignment.arms[static_cast<std::size_t>(i)] > 0
                     ? units.proxy_b[static_cast<std::size_t>(i)]
                     : units.proxy_a[static_cast<std::size_t>(i)];
  }
  if (!(proxy_sum > 0.0)) {
    throw Error(ErrorCategory::internal, "treated arm has zero total spend proxy");
  }
  const double r = budget / proxy_sum;

  HoldbackDraw draw;
  draw.spend_rate = r;
  draw.treated_baseline = 0.0;
  draw.data.x.resize(static_cast<std::size_t>(n));
  draw.data.y.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const bool treat_b = assignment.arms[idx] > 0;
    const double treated_base = treat_b ? units.baseline_b[idx] : units.baseline_a[idx];
    const double control_base = treat_b ? units.baseline_a[idx] : units.baseline_b[idx];
    const double spend = r * (treat_b ? units.proxy_b[idx] : units.proxy_a[idx]);
    draw.data.x[idx] = spend;
    draw.data.y[idx] = (treated_base + theta * spend) - control_base;
    draw.treated_baseline += treated_base;
  }
  return draw;
}

}  // namespace geodesign
