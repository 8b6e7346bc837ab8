#include "chemrag/fusion.hpp"

#include <algorithm>
#include <map>

namespace chemrag {

RankedList fuse_rrf(const std::vector<RankedList>& lists, FusionParams params, size_t k) {
    if (lists.empty()) throw ValidationError("fuse_rrf needs at least one input list");
    if (params.c < 1) throw ValidationError("rrf constant c must be >= 1");

    std::map<std::string, std::vector<size_t>> ranks_of; // doc -> 1-based ranks
    for (const RankedList& list : lists) {
        for (size_t pos = 0; pos < list.items.size(); ++pos)
            ranks_of[list.items[pos].id].push_back(pos + 1);
    }

    std::vector<ScoredId> scored;
    scored.reserve(ranks_of.size());
    for (auto& [id, ranks] : ranks_of) {
        std::sort(ranks.begin(), ranks.end());
        double score = 0.0;
        for (size_t rank : ranks)
            score += 1.0 / (static_cast<double>(params.c) + static_cast<double>(rank));
        scored.push_back({id, score});
    }
    return RankedList::from_scores(std::move(scored), k);
}

}  // namespace chemrag
