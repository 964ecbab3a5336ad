#include "geodesign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "geodesign/error.hpp"

namespace geodesign {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCategory::config, "normal_quantile requires p in (0, 1)");
  }
  static const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);
  return boost::math::quantile(kStdNormal, p);
}

double binomial_two_sided_p(int k, int m) {
  if (m < 0 || k < 0 || k > m) {
    throw Error(ErrorCategory::internal, "binomial_two_sided_p: k out of range");
  }
  if (m == 0) return 1.0;
  // log C(m, i) - m log 2, summed into each tail.
  const double log2m = m * std::log(2.0);
  auto log_pmf = [&](int i) {
    return std::lgamma(m + 1.0) - std::lgamma(i + 1.0) - std::lgamma(m - i + 1.0) - log2m;
  };
  double lower = 0.0, upper = 0.0;
  for (int i = 0; i <= k; ++i) lower += std::exp(log_pmf(i));
  for (int i = k; i <= m; ++i) upper += std::exp(log_pmf(i));
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw Error(ErrorCategory::internal, "empirical_quantile: empty sample");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCategory::config, "empirical_quantile requires p in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto idx = static_cast<long>(std::ceil(p * n)) - 1;
  idx = std::clamp<long>(idx, 0, static_cast<long>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

namespace {

std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCategory::internal, "spearman: mismatched or too-short samples");
  }
  const std::vector<double> ra = fractional_ranks(a);
  const std::vector<double> rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace geodesign
