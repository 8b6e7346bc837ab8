#pragma once

#include <vector>

#include "chemrag/ranked_list.hpp"

namespace chemrag {

struct FusionParams {
    unsigned c = 60; // rank constant, >= 1
};

// Reciprocal Rank Fusion: fused score of a document is the sum of
// 1/(c + rank) over every input list containing it (ranks 1-based).
// Contributions are summed in ascending rank order, which makes the result
// invariant under permutation of the input lists bit for bit.
RankedList fuse_rrf(const std::vector<RankedList>& lists, FusionParams params, size_t k);

}  // namespace chemrag
