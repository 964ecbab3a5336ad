#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "geodesign/experiment_sim.hpp"
#include "geodesign/pairing.hpp"

namespace geodesign {

// Balance gates applied to candidate assignments before they are accepted.
// sim_iroas_threshold is an absolute bound on |theta_hat| of a zero-effect
// simulated experiment; infinity disables that gate. Callers typically set
// it to 0.25x a reference RMSE (the design's own when available, otherwise
// one implied by the detectability target).
struct BalanceConfig {
  double sign_test_min_p = 0.2;
  double sim_iroas_threshold = std::numeric_limits<double>::infinity();
  int max_redraws = 1000;

  static BalanceConfig disabled() {
    return BalanceConfig{0.0, std::numeric_limits<double>::infinity(), 0};
  }
};

// Independent fair coin per pair.
Assignment draw_assignment(int n_pairs, std::mt19937_64& rng);

// Exact two-sided binomial test that positive (treated minus control)
// baseline signs occur at rate 1/2; zero differences are uninformative and
// excluded. Passes when the p-value reaches min_p.
struct SignCheckResult {
  bool pass;
  double p_value;
  int positives;
  int informative;  // pairs with a nonzero baseline difference
};
SignCheckResult sign_balance_check(const PairedUnits& units, const Assignment& assignment,
                                   double min_p);

// Runs one zero-effect experiment with the fixed assignment and estimates
// iROAS; an assignment is balanced when the artifact |theta_hat| stays
// within `threshold`. An estimation failure counts as a failed check.
struct SimIroasCheckResult {
  bool pass;
  std::optional<double> theta_sim;
};
SimIroasCheckResult sim_iroas_check(const PairedUnits& units, double budget,
                                    const Assignment& assignment, const TrimSpec& trim,
                                    double threshold);

// Draws assignments until both balance gates pass, up to cfg.max_redraws
// attempts.  When the cap is hit the last draw is returned with cap_hit
// set; callers decide whether that is an error or a counted warning.
struct RerandomizeResult {
  Assignment assignment;
  int attempts;
  bool cap_hit;
};
RerandomizeResult rerandomize(const PairedUnits& units, double budget,
                              const BalanceConfig& cfg, const TrimSpec& trim,
                              std::mt19937_64& rng);

// "pair_id,geo,arm" with arm in {treatment, control}; two rows per pair in
// pair order, pair_id 1-based. assignment.arms[i] == +1 marks pairs[i].geo_b
// as the treated geo.
void write_assignment(std::ostream& out, const PairSet& pairs, const Assignment& assignment);

struct AssignmentRow {
  long pair_id;
  std::string geo;
  bool treatment;
};

// Parses and validates the assignment format: exactly two rows per pair_id,
// one treatment and one control, distinct geos, ids contiguous from 1.
std::vector<AssignmentRow> read_assignment(std::istream& in);

}  // namespace geodesign
