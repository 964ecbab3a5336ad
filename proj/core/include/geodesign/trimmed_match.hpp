#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

namespace geodesign {

// Per-pair experiment outcomes: x_i is the treated-minus-control spend
// difference, y_i the response difference, index-aligned across pairs.
struct PairExperimentData {
  std::vector<double> x;
  std::vector<double> y;

  int n_pairs() const { return static_cast<int>(x.size()); }
};

// Trimming policy for the estimator. When fixed_trim_count is set, exactly
// that many pairs are trimmed from each tail; otherwise every trim count
// k = 0..floor(n * max_trim_rate) is tried and the one with the smallest
// se_proxy wins (ties to the smaller k).
struct TrimSpec {
  double max_trim_rate = 0.10;
  std::optional<int> fixed_trim_count;
};

struct TrimmedMatchEstimate {
  double theta_hat;
  int trim_count;
  std::vector<int> trimmed_pair_ids;  // 2 * trim_count indices, ascending
  double se_proxy;                    // +inf when uninformative
  double untrimmed_x_sum;
};

// Residuals e_i(theta) = y_i - theta * x_i.
std::vector<double> residuals(const PairExperimentData& data, double theta);

// All roots of the symmetric trimmed-mean equation
//   mean of the middle (n - 2k) order statistics of e_i(theta) == 0,
// found exactly. The residual order changes only at the pairwise crossing
// points theta_ij = (y_i - y_j) / (x_i - x_j); between crossings the trimmed
// mean is linear in theta, so each interval is solved in closed form
// (theta = sum y / sum x over the untrimmed set) and the candidate is kept
// iff it falls inside the closed interval and the untrimmed spend sum is
// nonzero. Roots within 1e-12 relative tolerance are deduplicated. Returned
// ascending; may be empty.
std::vector<double> solve_trimmed(const PairExperimentData& data, int trim_count);

// sqrt( sum_{i in untrimmed} e_i(theta)^2 * m/(m-1) ) / |sum untrimmed x|,
// m = |untrimmed|; +inf when m <= 1 or the spend sum is zero.
double se_proxy(const PairExperimentData& data, double theta,
                const std::vector<int>& untrimmed_ids);

// Point estimate with data-driven (or fixed) trimming. Within each k the
// root closest to the untrimmed estimate is kept (ties to the smaller
// root). Returns nullopt when no trim count yields a root; throws
// Error{no_spend_signal} when every x_i is zero.
std::optional<TrimmedMatchEstimate> estimate(const PairExperimentData& data,
                                             const TrimSpec& spec);

// "pair_id,x,y" reader for the CLI; pair ids must be unique positive
// integers. Returns data in file order alongside the original ids.
struct ExperimentFile {
  PairExperimentData data;
  std::vector<long> pair_ids;
};
ExperimentFile read_experiment_csv(std::istream& in);

}  // namespace geodesign
