#include "geodesign/trimmed_match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "geodesign/csv.hpp"
#include "geodesign/error.hpp"

namespace geodesign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRootTol = 1e-12;  // relative dedup tolerance between roots

void validate_data(const PairExperimentData& data) {
  if (data.x.size() != data.y.size()) {
    throw Error(ErrorCategory::data, "x and y must have the same number of pairs");
  }
  if (data.x.empty()) throw Error(ErrorCategory::data, "no pairs to estimate from");
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    if (!std::isfinite(data.x[i]) || !std::isfinite(data.y[i])) {
      throw Error(ErrorCategory::data, "non-finite value at pair index " + std::to_string(i));
    }
  }
}

void validate_trim_count(int n, int trim_count) {
  if (trim_count < 0) throw Error(ErrorCategory::config, "trim_count must be >= 0");
  if (n - 2 * trim_count < 1) {
    throw Error(ErrorCategory::config,
                "trim_count " + std::to_string(trim_count) + " leaves no pairs out of " +
                    std::to_string(n));
  }
}

// Order of pair indices by residual value at theta, ties by index. This is
// the canonical order used both by the sweep and by trimmed-set reporting.
std::vector<int> residual_order(const PairExperimentData& data, double theta) {
  std::vector<int> ord(data.x.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](int a, int b) {
    const double ea = data.y[static_cast<std::size_t>(a)] - theta * data.x[static_cast<std::size_t>(a)];
    const double eb = data.y[static_cast<std::size_t>(b)] - theta * data.x[static_cast<std::size_t>(b)];
    if (ea != eb) return ea < eb;
    return a < b;
  });
  return ord;
}

double trimmed_mean_at(const PairExperimentData& data, double theta, int trim_count) {
  std::vector<double> eps = residuals(data, theta);
  std::sort(eps.begin(), eps.end());
  const int n = static_cast<int>(eps.size());
  double sum = 0.0;
  for (int p = trim_count; p < n - trim_count; ++p) sum += eps[static_cast<std::size_t>(p)];
  return sum / (n - 2 * trim_count);
}

}  // namespace

std::vector<double> residuals(const PairExperimentData& data, double theta) {
  validate_data(data);
  std::vector<double> eps(data.x.size());
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = data.y[i] - theta * data.x[i];
  return eps;
}

std::vector<double> solve_trimmed(const PairExperimentData& data, int trim_count) {
  validate_data(data);
  const int n = data.n_pairs();
  validate_trim_count(n, trim_count);
  const double* x = data.x.data();
  const double* y = data.y.data();

  if (trim_count == 0) {
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
    }
    if (sx == 0.0) return {};
    return {sy / sx};
  }

  struct Crossing {
    double theta;
    int i, j;
  };
  std::vector<Crossing> bps;
  bps.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (x[i] != x[j]) bps.push_back({(y[i] - y[j]) / (x[i] - x[j]), i, j});
    }
  }
  std::sort(bps.begin(), bps.end(), [](const Crossing& a, const Crossing& b) {
    if (a.theta != b.theta) return a.theta < b.theta;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  const int lo_pos = trim_count;
  const int hi_pos = n - 1 - trim_count;

  std::vector<int> ord, pos(static_cast<std::size_t>(n));
  double sx = 0.0, sy = 0.0;  // running untrimmed sums; drift is reset on acceptance
  auto rebuild = [&](double theta_ref) {
    ord = residual_order(data, theta_ref);
    for (int p = 0; p < n; ++p) pos[static_cast<std::size_t>(ord[static_cast<std::size_t>(p)])] = p;
    sx = sy = 0.0;
    for (int p = lo_pos; p <= hi_pos; ++p) {
      sx += x[ord[static_cast<std::size_t>(p)]];
      sy += y[ord[static_cast<std::size_t>(p)]];
    }
  };
  rebuild(bps.empty() ? 0.0 : bps.front().theta - 1.0);

  std::vector<double> roots;
  // The running sums only pre-filter; any near-hit is re-summed from the
  // (exact, integer) order so accepted roots carry no accumulation error.
  auto try_interval = [&](double lo, double hi) {
    if (sx == 0.0 && sy == 0.0) return;
    const double guess = sx != 0.0 ? sy / sx : kInf;
    const double margin = 1e-6 * (1.0 + std::abs(guess));
    if (!(guess >= lo - margin && guess <= hi + margin)) return;
    double fx = 0.0, fy = 0.0;
    for (int p = lo_pos; p <= hi_pos; ++p) {
      fx += x[ord[static_cast<std::size_t>(p)]];
      fy += y[ord[static_cast<std::size_t>(p)]];
    }
    sx = fx;
    sy = fy;
    if (fx == 0.0) return;
    const double root = fy / fx;
    if (root >= lo && root <= hi) roots.push_back(root);
  };

  double lo = -kInf;
  std::size_t g = 0;
  while (g < bps.size()) {
    std::size_t h = g;
    while (h < bps.size() && bps[h].theta == bps[g].theta) ++h;
    try_interval(lo, bps[g].theta);

    // Cross the breakpoint: each crossing swaps two residuals that are
    // adjacent in the current order. Simultaneous crossings (ties or
    // coincident lines) may break adjacency; then the order is rebuilt
    // from scratch just right of the breakpoint.
    bool dirty = false;
    for (std::size_t t = g; t < h; ++t) {
      int i = bps[t].i, j = bps[t].j;
      int pi = pos[static_cast<std::size_t>(i)], pj = pos[static_cast<std::size_t>(j)];
      if (pi > pj) {
        std::swap(pi, pj);
        std::swap(i, j);
      }
      if (pj - pi != 1) {
        dirty = true;
        continue;
      }
      const bool in_lo = (pi >= lo_pos && pi <= hi_pos);
      const bool in_hi = (pj >= lo_pos && pj <= hi_pos);
      if (in_lo != in_hi) {
        if (in_hi) {  // position pj stays in-window; it now holds item i
          sx += x[i] - x[j];
          sy += y[i] - y[j];
        } else {  // position pi stays in-window; it now holds item j
          sx += x[j] - x[i];
          sy += y[j] - y[i];
        }
      }
      ord[static_cast<std::size_t>(pi)] = j;
      ord[static_cast<std::size_t>(pj)] = i;
      pos[static_cast<std::size_t>(i)] = pj;
      pos[static_cast<std::size_t>(j)] = pi;
    }
    const double bp = bps[g].theta;
    if (dirty) {
      const double ref = h < bps.size() ? bp + 0.5 * (bps[h].theta - bp)
                                        : bp + std::max(1.0, std::abs(bp));
      rebuild(ref);
    }
    lo = bp;
    g = h;
  }
  try_interval(lo, kInf);

  // Adjacent intervals can both report a root sitting exactly on their
  // shared breakpoint; collapse near-duplicates.
  std::vector<double> unique_roots;
  for (const double r : roots) {
    if (!unique_roots.empty() &&
        std::abs(r - unique_roots.back()) <=
            kRootTol * std::max(std::abs(r), std::abs(unique_roots.back()))) {
      continue;
    }
    unique_roots.push_back(r);
  }

  // Defensive check of the defining equation; genuine roots sit many orders
  // of magnitude below this bound.
  double max_ax = 0.0, max_ay = 0.0;
  for (int i = 0; i < n; ++i) {
    max_ax = std::max(max_ax, std::abs(x[i]));
    max_ay = std::max(max_ay, std::abs(y[i]));
  }
  std::erase_if(unique_roots, [&](double r) {
    const double scale = std::max(1e-300, max_ay + std::abs(r) * max_ax);
    return std::abs(trimmed_mean_at(data, r, trim_count)) > 1e-9 * scale;
  });
  return unique_roots;
}

double se_proxy(const PairExperimentData& data, double theta,
                const std::vector<int>& untrimmed_ids) {
  validate_data(data);
  const auto m = static_cast<int>(untrimmed_ids.size());
  if (m <= 1) return kInf;
  double sx = 0.0, ss = 0.0;
  for (const int i : untrimmed_ids) {
    if (i < 0 || i >= data.n_pairs()) {
      throw Error(ErrorCategory::internal, "se_proxy: pair index out of range");
    }
    const double eps = data.y[static_cast<std::size_t>(i)] - theta * data.x[static_cast<std::size_t>(i)];
    ss += eps * eps;
    sx += data.x[static_cast<std::size_t>(i)];
  }
  if (sx == 0.0) return kInf;
  return std::sqrt(ss * m / (m - 1.0)) / std::abs(sx);
}

std::optional<TrimmedMatchEstimate> estimate(const PairExperimentData& data,
                                             const TrimSpec& spec) {
  validate_data(data);
  const int n = data.n_pairs();
  if (std::all_of(data.x.begin(), data.x.end(), [](double v) { return v == 0.0; })) {
    throw Error(ErrorCategory::no_spend_signal,
                "all spend differences are zero; iROAS is undefined");
  }

  std::vector<int> candidates;
  if (spec.fixed_trim_count) {
    validate_trim_count(n, *spec.fixed_trim_count);
    candidates.push_back(*spec.fixed_trim_count);
  } else {
    if (!(spec.max_trim_rate >= 0.0 && spec.max_trim_rate < 0.5)) {
      throw Error(ErrorCategory::config, "max_trim_rate must lie in [0, 0.5)");
    }
    const int k_rate = static_cast<int>(std::floor(n * spec.max_trim_rate + 1e-9));
    const int k_max = std::min(k_rate, (n - 1) / 2);
    for (int k = 0; k <= k_max; ++k) candidates.push_back(k);
  }

  // Reference for picking among multiple roots: the untrimmed estimate
  // when it exists.
  const double sx_all = std::accumulate(data.x.begin(), data.x.end(), 0.0);
  const double sy_all = std::accumulate(data.y.begin(), data.y.end(), 0.0);
  const double reference = sx_all != 0.0 ? sy_all / sx_all : 0.0;

  std::optional<TrimmedMatchEstimate> best;
  for (const int k : candidates) {
    const std::vector<double> roots = solve_trimmed(data, k);
    if (roots.empty()) continue;
    double theta = roots.front();
    for (const double r : roots) {
      if (std::abs(r - reference) < std::abs(theta - reference)) theta = r;
      // roots ascend, so on a tie the earlier (smaller) root is kept
    }

    const std::vector<int> ord = residual_order(data, theta);
    TrimmedMatchEstimate cand;
    cand.theta_hat = theta;
    cand.trim_count = k;
    std::vector<int> untrimmed;
    untrimmed.reserve(static_cast<std::size_t>(n - 2 * k));
    for (int p = 0; p < n; ++p) {
      const int id = ord[static_cast<std::size_t>(p)];
      if (p < k || p > n - 1 - k) {
        cand.trimmed_pair_ids.push_back(id);
      } else {
        untrimmed.push_back(id);
      }
    }
    std::sort(cand.trimmed_pair_ids.begin(), cand.trimmed_pair_ids.end());
    cand.se_proxy = se_proxy(data, theta, untrimmed);
    cand.untrimmed_x_sum = 0.0;
    for (const int i : untrimmed) cand.untrimmed_x_sum += data.x[static_cast<std::size_t>(i)];

    if (!best || cand.se_proxy < best->se_proxy) best = std::move(cand);
  }
  return best;
}

ExperimentFile read_experiment_csv(std::istream& in) {
  const std::vector<CsvRow> rows = read_csv(in);
  if (rows.empty()) throw Error(ErrorCategory::data, "empty experiment file");
  const CsvRow& header = rows.front();
  if (header.fields != std::vector<std::string>{"pair_id", "x", "y"}) {
    throw Error(ErrorCategory::data, "line " + std::to_string(header.line) +
                                         ": expected header 'pair_id,x,y'");
  }
  ExperimentFile out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string at = "line " + std::to_string(row.line) + ": ";
    if (row.fields.size() != 3) throw Error(ErrorCategory::data, at + "expected 3 fields");
    long id = 0;
    double xv = 0.0, yv = 0.0;
    if (!parse_int(row.fields[0], id) || id < 1) {
      throw Error(ErrorCategory::data, at + "bad pair_id '" + row.fields[0] + "'");
    }
    if (std::find(out.pair_ids.begin(), out.pair_ids.end(), id) != out.pair_ids.end()) {
      throw Error(ErrorCategory::data, at + "duplicate pair_id " + std::to_string(id));
    }
    if (!parse_double(row.fields[1], xv) || !parse_double(row.fields[2], yv)) {
      throw Error(ErrorCategory::data, at + "bad numeric value");
    }
    out.pair_ids.push_back(id);
    out.data.x.push_back(xv);
    out.data.y.push_back(yv);
  }
  if (out.pair_ids.empty()) throw Error(ErrorCategory::data, "experiment file has no pairs");
  return out;
}

}  // namespace geodesign
