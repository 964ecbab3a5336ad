#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "geodesign/randomization.hpp"

namespace geodesign {

// One Monte Carlo evaluation of a candidate design: `replicates` simulated
// experiments on the paired units, each with a freshly rerandomized
// assignment and a known true iROAS `theta`.
struct EvalInputs {
  PairedUnits units;
  double budget = 0.0;
  double theta = 0.0;
  int replicates = 1000;
  TrimSpec trim;
  BalanceConfig balance;
  std::uint64_t seed = 0;
};

struct ReplicateResult {
  std::optional<double> theta_hat;  // nullopt when estimation failed
  double budget_to_baseline;        // budget / treated-group baseline
  bool balance_cap_hit;
};

// Replicate `index` of the evaluation, driven entirely by a stream derived
// from (seed, replicate index): the result does not depend on worker count
// or on which other replicates ran.
ReplicateResult simulate_replicate(const EvalInputs& in, int index);

// All replicates, in index order.
std::vector<ReplicateResult> run_replicates(const EvalInputs& in, int workers);

struct RmseReport {
  int n_pairs;
  int replicates;
  int failures;  // replicates whose estimation failed (excluded from rmse)
  int balance_cap_hits;
  double rmse;                // sqrt(mean (theta_hat - theta)^2), successes only
  double budget_to_baseline;  // mean over all replicates
  double theta0;              // minimum detectable iROAS implied by rmse
  std::uint64_t seed;
};

// Runs the replicates and reduces them; theta0 uses the one-sided size
// `alpha` and target power `beta`. Throws Error{estimation} if every
// replicate fails.
RmseReport evaluate_rmse(const EvalInputs& in, int workers = 1, double alpha = 0.10,
                         double beta = 0.90);

// Successful estimates in replicate order (failures dropped); used to build
// empirical null / alternative distributions.
std::vector<double> replicate_estimates(const EvalInputs& in, int workers = 1);

// rmse * (Phi^{-1}(1 - alpha) + Phi^{-1}(beta)): the smallest true iROAS
// detectable with power >= beta by a one-sided level-alpha test when the
// estimator is approximately normal with the given rmse.
double minimum_detectable_iroas(double rmse, double alpha = 0.10, double beta = 0.90);

// Fraction of alternative-hypothesis estimates strictly above the null
// critical value.
double empirical_power(const std::vector<double>& h1_estimates, double null_critical_value);

// Mean over replicates of budget / treated-group baseline (independent of
// estimation success).
double budget_to_baseline(const EvalInputs& in, int workers = 1);

}  // namespace geodesign
