#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "chemrag/fusion.hpp"

using namespace chemrag;

namespace {

RankedList list_of(const std::vector<std::string>& ids) {
    RankedList out;
    double score = static_cast<double>(ids.size());
    for (const std::string& id : ids) out.items.push_back({id, score--});
    return out;
}

// independent oracle: per-document ranks gathered by scanning the lists,
// summed over sorted ranks
std::map<std::string, double> oracle_scores(const std::vector<RankedList>& lists, unsigned c) {
    std::map<std::string, double> out;
    std::map<std::string, std::vector<size_t>> ranks;
    for (const RankedList& list : lists)
        for (size_t pos = 0; pos < list.items.size(); ++pos)
            ranks[list.items[pos].id].push_back(pos + 1);
    for (auto& [id, rs] : ranks) {
        std::sort(rs.begin(), rs.end());
        double score = 0;
        for (size_t r : rs) score += 1.0 / (double(c) + double(r));
        out[id] = score;
    }
    return out;
}

}  // namespace

TEST_SUITE("reciprocal rank fusion") {

TEST_CASE("single input list keeps its order") {
    RankedList input = list_of({"a", "b", "c", "d"});
    RankedList fused = fuse_rrf({input}, {}, 10);
    REQUIRE(fused.size() == 4);
    for (size_t i = 0; i < 4; ++i) CHECK(fused.items[i].id == input.items[i].id);
}

TEST_CASE("doc ranked first in both of two lists scores 2/61 at c=60") {
    RankedList a = list_of({"top", "x"});
    RankedList b = list_of({"top", "y"});
    RankedList fused = fuse_rrf({a, b}, FusionParams{60}, 10);
    CHECK(fused.items[0].id == "top");
    CHECK(fused.items[0].score == doctest::Approx(2.0 / 61.0).epsilon(1e-15));
}

TEST_CASE("rank 2 in both lists beats rank 1 in only one") {
    // B: 2/62 ~ 0.032258 vs A: 1/61 ~ 0.016393
    RankedList one = list_of({"A", "B"});
    RankedList two = list_of({"C", "B"});
    RankedList fused = fuse_rrf({one, two}, FusionParams{60}, 10);
    CHECK(fused.items[0].id == "B");
    CHECK(fused.items[0].score == doctest::Approx(2.0 / 62.0).epsilon(1e-15));
    double a_score = 0;
    for (const auto& item : fused.items)
        if (item.id == "A") a_score = item.score;
    CHECK(a_score == doctest::Approx(1.0 / 61.0).epsilon(1e-15));
}

TEST_CASE("fusing four identical lists preserves the order") {
    RankedList input = list_of({"p", "q", "r"});
    RankedList fused = fuse_rrf({input, input, input, input}, {}, 10);
    REQUIRE(fused.size() == 3);
    CHECK(fused.items[0].id == "p");
    CHECK(fused.items[1].id == "q");
    CHECK(fused.items[2].id == "r");
}

TEST_CASE("empty input and bad c are rejected") {
    CHECK_THROWS_AS(fuse_rrf({}, {}, 5), ValidationError);
    CHECK_THROWS_AS(fuse_rrf({list_of({"a"})}, FusionParams{0}, 5), ValidationError);
}

TEST_CASE("200 randomized trials match the oracle and are permutation invariant") {
    std::mt19937 rng(20250810);
    for (int trial = 0; trial < 200; ++trial) {
        // 4 lists of 100 ids drawn from a 300-id universe
        std::vector<RankedList> lists;
        for (int l = 0; l < 4; ++l) {
            std::vector<int> universe(300);
            for (int i = 0; i < 300; ++i) universe[i] = i;
            std::shuffle(universe.begin(), universe.end(), rng);
            std::vector<std::string> ids;
            for (int i = 0; i < 100; ++i) ids.push_back("doc" + std::to_string(universe[i]));
            lists.push_back(list_of(ids));
        }
        RankedList fused = fuse_rrf(lists, FusionParams{60}, 400);
        auto oracle = oracle_scores(lists, 60);
        REQUIRE(fused.size() == oracle.size());
        for (const auto& item : fused.items) {
            auto it = oracle.find(item.id);
            REQUIRE(it != oracle.end());
            CHECK(item.score == it->second); // bitwise: same sorted-rank summation
        }
        CHECK(fused.well_ordered());

        std::vector<RankedList> permuted = {lists[2], lists[0], lists[3], lists[1]};
        RankedList fused2 = fuse_rrf(permuted, FusionParams{60}, 400);
        REQUIRE(fused2.size() == fused.size());
        for (size_t i = 0; i < fused.size(); ++i) {
            CHECK(fused2.items[i].id == fused.items[i].id);
            CHECK(fused2.items[i].score == fused.items[i].score);
        }
    }
}

TEST_CASE("truncation to k keeps the top of the fused order") {
    RankedList a = list_of({"a", "b", "c", "d", "e"});
    RankedList b = list_of({"b", "a", "e", "c", "f"});
    RankedList full = fuse_rrf({a, b}, {}, 100);
    RankedList top3 = fuse_rrf({a, b}, {}, 3);
    REQUIRE(top3.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(top3.items[i].id == full.items[i].id);
}

}
