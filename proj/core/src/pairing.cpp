#include "geodesign/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>

#include "geodesign/csv.hpp"
#include "geodesign/error.hpp"
#include "geodesign/matching.hpp"

namespace geodesign {

namespace {

// Pair distances are quantized to this many steps of the largest distance
// before the integer matching solve. The selected matching's total distance
// is then within V * d_max / 2^40 (< 1e-9 relative) of the true optimum,
// while all dual arithmetic stays exact in int64.
constexpr std::int64_t kQuantScale = std::int64_t{1} << 40;

void canonicalize(PairSet& ps) {
  for (GeoPair& p : ps.pairs) {
    if (p.geo_b < p.geo_a) std::swap(p.geo_a, p.geo_b);
  }
  std::sort(ps.pairs.begin(), ps.pairs.end(), [](const GeoPair& a, const GeoPair& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.geo_a != b.geo_a) return a.geo_a < b.geo_a;
    return a.geo_b < b.geo_b;
  });
  std::sort(ps.excluded_geos.begin(), ps.excluded_geos.end());
}

void check_pair_count(const DistanceMatrix& dm, int n) {
  if (n < 1) throw Error(ErrorCategory::config, "number of pairs must be >= 1");
  if (2 * n > dm.n_geos()) {
    throw Error(ErrorCategory::config,
                "cannot form " + std::to_string(n) + " pairs from " +
                    std::to_string(dm.n_geos()) + " geos");
  }
}

}  // namespace

DistanceMatrix distance_matrix(const std::vector<BlockTotals>& blocks) {
  if (blocks.empty()) throw Error(ErrorCategory::data, "no geos to build distances from");
  const std::size_t n_blocks = blocks.front().totals.size();
  if (n_blocks == 0) throw Error(ErrorCategory::data, "block totals are empty");

  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return blocks[a].geo < blocks[b].geo; });

  DistanceMatrix dm;
  dm.geos.reserve(blocks.size());
  for (const std::size_t i : order) {
    if (blocks[i].totals.size() != n_blocks) {
      throw Error(ErrorCategory::data, "geo '" + blocks[i].geo + "' has a mismatched block count");
    }
    if (!dm.geos.empty() && dm.geos.back() == blocks[i].geo) {
      throw Error(ErrorCategory::data, "duplicate geo '" + blocks[i].geo + "' in block totals");
    }
    dm.geos.push_back(blocks[i].geo);
  }

  const int n = dm.n_geos();
  dm.d.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto& ti = blocks[order[static_cast<std::size_t>(i)]].totals;
    for (int j = i + 1; j < n; ++j) {
      const auto& tj = blocks[order[static_cast<std::size_t>(j)]].totals;
      double ss = 0.0;
      for (std::size_t b = 0; b < n_blocks; ++b) {
        const double diff = ti[b] - tj[b];
        ss += diff * diff;
      }
      const double dist = std::sqrt(ss);
      dm.d[static_cast<std::size_t>(i) * n + j] = dist;
      dm.d[static_cast<std::size_t>(j) * n + i] = dist;
    }
  }
  return dm;
}

PairingLoss pairing_loss(const PairSet& pairs) {
  double loss = 0.0;
  for (const GeoPair& p : pairs.pairs) loss += p.distance;
  return loss;
}

PairSet optimal_pairs(const DistanceMatrix& dm, int n) {
  check_pair_count(dm, n);
  const int n_real = dm.n_geos();
  const int n_pseudo = n_real - 2 * n;
  const int V = n_real + n_pseudo;  // always even

  double d_max = 0.0;
  for (double v : dm.d) d_max = std::max(d_max, v);

  // Transform min-distance perfect matching into max-weight matching:
  // quantize distances to q in [0, kQuantScale], give a real-real edge
  // weight C - q and a pseudo-real edge weight C, and leave pseudo-pseudo
  // edges absent. With C > n * kQuantScale, any matching that leaves a
  // possible pair unmade (or burns two pseudo-units on each other) loses
  // more than distances could ever recover, so the maximum-weight matching
  // is perfect, uses each pseudo-unit on a real geo, and minimizes total
  // distance. Weights are doubled to keep the solver's halved dual
  // adjustments integral.
  const std::int64_t C = kQuantScale * (V / 2 + 1) + 1;
  std::vector<std::int64_t> w(static_cast<std::size_t>(V) * V, 0);
  auto wat = [&](int i, int j) -> std::int64_t& {
    return w[static_cast<std::size_t>(i) * V + j];
  };
  for (int i = 0; i < n_real; ++i) {
    for (int j = i + 1; j < n_real; ++j) {
      const double scaled = d_max > 0.0 ? dm.at(i, j) / d_max * static_cast<double>(kQuantScale) : 0.0;
      const auto q = static_cast<std::int64_t>(std::llround(scaled));
      wat(i, j) = wat(j, i) = 2 * (C - q);
    }
    for (int p = n_real; p < V; ++p) wat(i, p) = wat(p, i) = 2 * C;
  }

  const std::vector<int> mate = max_weight_matching(V, w);

  PairSet ps;
  std::vector<char> paired(static_cast<std::size_t>(n_real), 0);
  for (int i = 0; i < n_real; ++i) {
    const int j = mate[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n_real || j < i) continue;
    ps.pairs.push_back(GeoPair{dm.geos[static_cast<std::size_t>(i)],
                               dm.geos[static_cast<std::size_t>(j)], dm.at(i, j)});
    paired[static_cast<std::size_t>(i)] = paired[static_cast<std::size_t>(j)] = 1;
  }
  if (static_cast<int>(ps.pairs.size()) != n) {
    throw Error(ErrorCategory::internal, "matching produced " +
                                             std::to_string(ps.pairs.size()) +
                                             " pairs, expected " + std::to_string(n));
  }
  for (int i = 0; i < n_real; ++i) {
    if (!paired[static_cast<std::size_t>(i)]) {
      ps.excluded_geos.push_back(dm.geos[static_cast<std::size_t>(i)]);
    }
  }
  canonicalize(ps);
  return ps;
}

namespace {

void enumerate_rec(const DistanceMatrix& dm, int n, std::vector<char>& used, int skips_left,
                   std::vector<std::pair<int, int>>& current,
                   std::vector<std::pair<PairSet, PairingLoss>>& out) {
  if (static_cast<int>(current.size()) == n) {
    PairSet ps;
    std::vector<char> in_pair(static_cast<std::size_t>(dm.n_geos()), 0);
    for (const auto& [i, j] : current) {
      ps.pairs.push_back(GeoPair{dm.geos[static_cast<std::size_t>(i)],
                                 dm.geos[static_cast<std::size_t>(j)], dm.at(i, j)});
      in_pair[static_cast<std::size_t>(i)] = in_pair[static_cast<std::size_t>(j)] = 1;
    }
    for (int g = 0; g < dm.n_geos(); ++g) {
      if (!in_pair[static_cast<std::size_t>(g)]) {
        ps.excluded_geos.push_back(dm.geos[static_cast<std::size_t>(g)]);
      }
    }
    canonicalize(ps);
    const PairingLoss loss = pairing_loss(ps);
    out.emplace_back(std::move(ps), loss);
    return;
  }
  int first = 0;
  while (first < dm.n_geos() && used[static_cast<std::size_t>(first)]) ++first;
  if (first == dm.n_geos()) return;
  used[static_cast<std::size_t>(first)] = 1;
  // Option 1: leave `first` unpaired, if exclusions remain.
  if (skips_left > 0) {
    enumerate_rec(dm, n, used, skips_left - 1, current, out);
  }
  // Option 2: pair `first` with each later unused geo.
  for (int j = first + 1; j < dm.n_geos(); ++j) {
    if (used[static_cast<std::size_t>(j)]) continue;
    used[static_cast<std::size_t>(j)] = 1;
    current.emplace_back(first, j);
    enumerate_rec(dm, n, used, skips_left, current, out);
    current.pop_back();
    used[static_cast<std::size_t>(j)] = 0;
  }
  used[static_cast<std::size_t>(first)] = 0;
}

}  // namespace

std::vector<std::pair<PairSet, PairingLoss>> enumerate_pairings(const DistanceMatrix& dm,
                                                                int n) {
  check_pair_count(dm, n);
  if (dm.n_geos() > 12) {
    throw Error(ErrorCategory::config,
                "enumerate_pairings is an exhaustive oracle and refuses more than 12 geos");
  }
  std::vector<std::pair<PairSet, PairingLoss>> out;
  std::vector<char> used(static_cast<std::size_t>(dm.n_geos()), 0);
  std::vector<std::pair<int, int>> current;
  enumerate_rec(dm, n, used, dm.n_geos() - 2 * n, current, out);
  return out;
}

PairSet rank_pairs(const GeoPanel& panel, DateRange period, int block_length_days, int n) {
  const std::map<std::string, double> totals = period_totals(panel, panel.geos(), period);
  const std::vector<BlockTotals> blocks = block_totals(panel, period, block_length_days);
  const DistanceMatrix dm = distance_matrix(blocks);

  if (n < 1) throw Error(ErrorCategory::config, "number of pairs must be >= 1");
  std::vector<int> by_size(static_cast<std::size_t>(dm.n_geos()));
  std::iota(by_size.begin(), by_size.end(), 0);
  std::sort(by_size.begin(), by_size.end(), [&](int a, int b) {
    const double ta = totals.at(dm.geos[static_cast<std::size_t>(a)]);
    const double tb = totals.at(dm.geos[static_cast<std::size_t>(b)]);
    if (ta != tb) return ta > tb;
    return dm.geos[static_cast<std::size_t>(a)] < dm.geos[static_cast<std::size_t>(b)];
  });

  const int n_rank_pairs = dm.n_geos() / 2;
  if (n > n_rank_pairs) {
    throw Error(ErrorCategory::config,
                "cannot form " + std::to_string(n) + " rank pairs from " +
                    std::to_string(dm.n_geos()) + " geos");
  }
  PairSet all;
  for (int k = 0; k < n_rank_pairs; ++k) {
    const int i = by_size[static_cast<std::size_t>(2 * k)];
    const int j = by_size[static_cast<std::size_t>(2 * k + 1)];
    all.pairs.push_back(GeoPair{dm.geos[static_cast<std::size_t>(i)],
                                dm.geos[static_cast<std::size_t>(j)], dm.at(i, j)});
  }
  canonicalize(all);  // sorts by distance; selection below keeps the closest n

  PairSet ps;
  ps.pairs.assign(all.pairs.begin(), all.pairs.begin() + n);
  std::vector<char> kept(static_cast<std::size_t>(dm.n_geos()), 0);
  for (const GeoPair& p : ps.pairs) {
    kept[static_cast<std::size_t>(
        std::lower_bound(dm.geos.begin(), dm.geos.end(), p.geo_a) - dm.geos.begin())] = 1;
    kept[static_cast<std::size_t>(
        std::lower_bound(dm.geos.begin(), dm.geos.end(), p.geo_b) - dm.geos.begin())] = 1;
  }
  for (int g = 0; g < dm.n_geos(); ++g) {
    if (!kept[static_cast<std::size_t>(g)]) {
      ps.excluded_geos.push_back(dm.geos[static_cast<std::size_t>(g)]);
    }
  }
  canonicalize(ps);
  return ps;
}

void write_pairs(std::ostream& out, const PairSet& pairs) {
  out << "pair_id,geo_a,geo_b,distance\n";
  int id = 1;
  for (const GeoPair& p : pairs.pairs) {
    out << id++ << ',' << p.geo_a << ',' << p.geo_b << ',' << format_double(p.distance)
        << '\n';
  }
}

PairSet read_pairs(std::istream& in) {
  const std::vector<CsvRow> rows = read_csv(in);
  if (rows.empty()) throw Error(ErrorCategory::data, "empty pairs file");
  const CsvRow& header = rows.front();
  if (header.fields != std::vector<std::string>{"pair_id", "geo_a", "geo_b", "distance"}) {
    throw Error(ErrorCategory::data,
                "line " + std::to_string(header.line) +
                    ": expected header 'pair_id,geo_a,geo_b,distance'");
  }
  PairSet ps;
  std::vector<std::string> seen;
  long expected_id = 1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string at = "line " + std::to_string(row.line) + ": ";
    if (row.fields.size() != 4) throw Error(ErrorCategory::data, at + "expected 4 fields");
    long id = 0;
    double dist = 0.0;
    if (!parse_int(row.fields[0], id) || id != expected_id) {
      throw Error(ErrorCategory::data,
                  at + "pair_id must count up from 1 (expected " +
                      std::to_string(expected_id) + ")");
    }
    ++expected_id;
    if (row.fields[1].empty() || row.fields[2].empty() || row.fields[1] == row.fields[2]) {
      throw Error(ErrorCategory::data, at + "pair needs two distinct geo ids");
    }
    if (!parse_double(row.fields[3], dist) || dist < 0.0) {
      throw Error(ErrorCategory::data, at + "bad distance '" + row.fields[3] + "'");
    }
    for (const std::string* id_ptr : {&row.fields[1], &row.fields[2]}) {
      if (std::find(seen.begin(), seen.end(), *id_ptr) != seen.end()) {
        throw Error(ErrorCategory::data, at + "geo '" + *id_ptr + "' appears in two pairs");
      }
      seen.push_back(*id_ptr);
    }
    GeoPair p{row.fields[1], row.fields[2], dist};
    if (p.geo_b < p.geo_a) std::swap(p.geo_a, p.geo_b);
    ps.pairs.push_back(std::move(p));
  }
  if (ps.pairs.empty()) throw Error(ErrorCategory::data, "pairs file has no pairs");
  return ps;
}

}  // namespace geodesign
