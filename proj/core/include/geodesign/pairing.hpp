#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "geodesign/geo_panel.hpp"

namespace geodesign {

// Symmetric geo-by-geo distances; geos are kept in lexicographic id order so
// every downstream computation is independent of input ordering.
struct DistanceMatrix {
  std::vector<std::string> geos;
  std::vector<double> d;  // n x n, row-major

  int n_geos() const { return static_cast<int>(geos.size()); }
  double at(int i, int j) const { return d[static_cast<std::size_t>(i) * geos.size() + j]; }
};

// Euclidean distance between per-block response totals:
//   D(g, g') = sqrt(sum_blocks (T_bg - T_bg')^2).
// Every geo must carry the same number of blocks.
DistanceMatrix distance_matrix(const std::vector<BlockTotals>& blocks);

// A matched pair, ids ordered so geo_a < geo_b.
struct GeoPair {
  std::string geo_a;
  std::string geo_b;
  double distance;
};

// Pairs sorted by (distance, geo_a, geo_b); excluded geos sorted by id.
struct PairSet {
  std::vector<GeoPair> pairs;
  std::vector<std::string> excluded_geos;
};

using PairingLoss = double;

PairingLoss pairing_loss(const PairSet& pairs);

// Exact minimum-total-distance selection of n disjoint pairs out of all
// geos. Geos left over are absorbed by zero-cost pseudo-units inside a
// single perfect-matching solve, so exclusion is co-optimized with pairing
// rather than decided greedily. Throws Error{config} unless 1 <= 2n <= N.
PairSet optimal_pairs(const DistanceMatrix& dm, int n);

// Every way to choose n disjoint pairs (reference oracle; factorial growth).
// Refuses more than 12 geos.
std::vector<std::pair<PairSet, PairingLoss>> enumerate_pairings(const DistanceMatrix& dm,
                                                                int n);

// Rank-adjacency baseline: sort geos by descending response total over
// `period`, pair neighbours (rank 1 with 2, 3 with 4, ...), keep the n pairs
// with the smallest block-distance. An odd geo count leaves the last rank
// unpaired. This is the comparison method, not the recommended one.
PairSet rank_pairs(const GeoPanel& panel, DateRange period, int block_length_days, int n);

// "pair_id,geo_a,geo_b,distance" with pair_id 1-based in ascending distance
// order (the PairSet order).
void write_pairs(std::ostream& out, const PairSet& pairs);
PairSet read_pairs(std::istream& in);

}  // namespace geodesign
