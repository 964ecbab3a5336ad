#pragma once

#include <vector>

namespace geodesign {

// Standard normal quantile function, Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

// Exact two-sided binomial test of k successes in m trials against p = 1/2,
// doubling the smaller tail and clamping at 1. m = 0 yields p = 1.
double binomial_two_sided_p(int k, int m);

// Inverse-ECDF quantile (type 1): smallest sample value v such that the
// fraction of samples <= v is at least p. Sorts a copy.
double empirical_quantile(std::vector<double> values, double p);

// Spearman rank correlation; average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace geodesign
