#pragma once
// Exact minimum-weight perfect matching on small dense graphs.
//
// Primal-dual blossom method, O(n^3).  Weights are integers (callers scale
// their log-likelihood ratios into int64 before matching) and the answer is
// exact: all dual arithmetic stays integral, no floating point is involved.

#include <cstdint>
#include <utility>
#include <vector>

namespace gkpft {

// `weights` is a full symmetric matrix over an even number of vertices;
// weights[i][j] >= 0, diagonal ignored.  Returns n/2 vertex pairs minimizing
// the total weight.  Throws std::invalid_argument for odd sizes.
std::vector<std::pair<int, int>> min_weight_perfect_matching(
    const std::vector<std::vector<std::int64_t>>& weights);

// Total weight of a matching under a weight matrix (convenience for tests
// and decoders).
std::int64_t matching_weight(const std::vector<std::pair<int, int>>& pairs,
                             const std::vector<std::vector<std::int64_t>>& weights);

}  // namespace gkpft
