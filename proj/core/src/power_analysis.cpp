#include "geodesign/power_analysis.hpp"

#include <cmath>
#include <limits>

#include "geodesign/error.hpp"
#include "geodesign/parallel.hpp"
#include "geodesign/rng.hpp"
#include "geodesign/stats.hpp"

namespace geodesign {

ReplicateResult simulate_replicate(const EvalInputs& in, int index) {
  std::mt19937_64 rng = make_stream(in.seed, {stream::kReplicate, static_cast<std::uint64_t>(index)});
  const RerandomizeResult rr = rerandomize(in.units, in.budget, in.balance, in.trim, rng);
  const HoldbackDraw draw = make_holdback_data(in.units, rr.assignment, in.budget, in.theta);
  ReplicateResult out;
  out.balance_cap_hit = rr.cap_hit;
  out.budget_to_baseline =
      draw.treated_baseline > 0.0 ? in.budget / draw.treated_baseline
                                  : std::numeric_limits<double>::infinity();
  std::optional<TrimmedMatchEstimate> est;
  try {
    est = estimate(draw.data, in.trim);
  } catch (const Error&) {
    est.reset();
  }
  if (est.has_value()) out.theta_hat = est->theta_hat;
  return out;
}

std::vector<ReplicateResult> run_replicates(const EvalInputs& in, int workers) {
  if (in.replicates <= 0)
    throw Error(ErrorCategory::config, "replicates must be positive");
  validate_units(in.units);
  std::vector<ReplicateResult> results(static_cast<std::size_t>(in.replicates));
  parallel_for(results.size(), workers,
               [&](std::size_t i) { results[i] = simulate_replicate(in, static_cast<int>(i)); });
  return results;
}

RmseReport evaluate_rmse(const EvalInputs& in, int workers, double alpha, double beta) {
  const std::vector<ReplicateResult> results = run_replicates(in, workers);
  RmseReport report{};
  report.n_pairs = in.units.n_pairs();
  report.replicates = in.replicates;
  report.seed = in.seed;
  double sq_sum = 0.0;
  double b2b_sum = 0.0;
  for (const ReplicateResult& r : results) {
    if (r.balance_cap_hit) ++report.balance_cap_hits;
    b2b_sum += r.budget_to_baseline;
    if (!r.theta_hat.has_value()) {
      ++report.failures;
      continue;
    }
    const double err = *r.theta_hat - in.theta;
    sq_sum += err * err;
  }
  const int successes = report.replicates - report.failures;
  if (successes == 0)
    throw Error(ErrorCategory::estimation, "every replicate failed to produce an estimate");
  report.rmse = std::sqrt(sq_sum / successes);
  report.budget_to_baseline = b2b_sum / report.replicates;
  report.theta0 = minimum_detectable_iroas(report.rmse, alpha, beta);
  return report;
}

std::vector<double> replicate_estimates(const EvalInputs& in, int workers) {
  const std::vector<ReplicateResult> results = run_replicates(in, workers);
  std::vector<double> out;
  out.reserve(results.size());
  for (const ReplicateResult& r : results)
    if (r.theta_hat.has_value()) out.push_back(*r.theta_hat);
  return out;
}

double budget_to_baseline(const EvalInputs& in, int workers) {
  const std::vector<ReplicateResult> results = run_replicates(in, workers);
  double sum = 0.0;
  for (const ReplicateResult& r : results) sum += r.budget_to_baseline;
  return sum / static_cast<double>(results.size());
}

double minimum_detectable_iroas(double rmse, double alpha, double beta) {
  if (!(rmse >= 0.0) || !std::isfinite(rmse))
    throw Error(ErrorCategory::internal, "minimum_detectable_iroas: rmse must be finite and >= 0");
  return rmse * (normal_quantile(1.0 - alpha) + normal_quantile(beta));
}

double empirical_power(const std::vector<double>& h1_estimates, double null_critical_value) {
  if (h1_estimates.empty()) return 0.0;
  std::size_t above = 0;
  for (double v : h1_estimates)
    if (v > null_critical_value) ++above;
  return static_cast<double>(above) / static_cast<double>(h1_estimates.size());
}

}  // namespace geodesign
