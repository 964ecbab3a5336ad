#pragma once

#include <cstdint>
#include <vector>

#include "geodesign/trimmed_match.hpp"

namespace geodesign {

// Pair-aligned inputs for simulated experiments: for pair i, geo "a"/"b"
// follow the PairSet's (geo_a, geo_b) order. Baselines are uninfluenced
// responses over the evaluation window; proxies are nonnegative expected
// spend shares used to split the budget.
struct PairedUnits {
  std::vector<double> baseline_a;
  std::vector<double> baseline_b;
  std::vector<double> proxy_a;
  std::vector<double> proxy_b;

  int n_pairs() const { return static_cast<int>(baseline_a.size()); }
};

// Throws Error{data} unless all vectors align, values are finite, proxies
// and baselines are >= 0, and at least one pair has both proxies positive
// (which guarantees a positive treated-proxy sum under every assignment).
void validate_units(const PairedUnits& units);

// arms[i] = +1 puts pair i's second geo (geo_b) in treatment, -1 the first.
struct Assignment {
  std::vector<std::int8_t> arms;

  int n_pairs() const { return static_cast<int>(arms.size()); }
};

// One simulated holdback experiment under a known iROAS theta: the budget
// is split over treated geos proportionally to their proxies
// (r = budget / sum of treated proxies), each treated geo receives spend
// r * proxy and response uplift theta * spend, and controls stay at
// baseline. x/y are treated-minus-control differences, so sum(x) == budget.
struct HoldbackDraw {
  PairExperimentData data;
  double spend_rate;        // r
  double treated_baseline;  // sum of treated-geo baselines
};

HoldbackDraw make_holdback_data(const PairedUnits& units, const Assignment& assignment,
                                double budget, double theta);

}  // namespace geodesign
