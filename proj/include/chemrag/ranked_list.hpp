#pragma once

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "chemrag/errors.hpp"

namespace chemrag {

struct ScoredId {
    std::string id;
    double score = 0.0;
};

// Ordered (snippet_id, score) pairs: descending score, ties broken by
// ascending snippet_id. Never holds a duplicate id.
struct RankedList {
    std::vector<ScoredId> items;

    static bool ordered_before(const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    }

    // Sorts, verifies uniqueness, truncates to k.
    static RankedList from_scores(std::vector<ScoredId> scored, size_t k) {
        std::sort(scored.begin(), scored.end(), ordered_before);
        std::unordered_set<std::string> seen;
        for (const ScoredId& item : scored)
            if (!seen.insert(item.id).second)
                throw IntegrityError("duplicate snippet id in ranked list: " + item.id);
        if (scored.size() > k) scored.resize(k);
        return RankedList{std::move(scored)};
    }

    bool well_ordered() const {
        for (size_t i = 1; i < items.size(); ++i)
            if (!ordered_before(items[i - 1], items[i])) return false;
        return true;
    }

    size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

}  // namespace chemrag
