#pragma once

#include <cstdint>
#include <vector>

namespace geodesign {

// Maximum-weight matching on a dense general graph, Edmonds' blossom
// algorithm with dual variables, O(V^3).
//
// `weights` is a V x V symmetric matrix (row-major); entry 0 means "no
// edge" and positive entries are edge weights. Self-weights are ignored.
// Returns mate[i] = j (or -1 for unmatched vertices). The matching
// maximizes total weight, not cardinality; to force a perfect matching,
// shift weights so that every admissible edge outweighs leaving vertices
// unmatched (see pairing.cpp).
//
// Deterministic: ties are resolved by fixed vertex-index order, so equal
// inputs give identical matchings.
std::vector<int> max_weight_matching(int num_vertices,
                                     const std::vector<std::int64_t>& weights);

}  // namespace geodesign
