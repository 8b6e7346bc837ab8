#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chemrag/corpus.hpp"
#include "chemrag/ranked_list.hpp"

namespace chemrag {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// Inverted index with Okapi BM25 scoring. Documents are kept in ascending
// snippet-id order; scoring is exact (no pruning), so results always agree
// with brute-force evaluation.
class LexicalIndex {
public:
    static LexicalIndex build(std::vector<Snippet> snippets, Bm25Params params = {});

    // Sum over query terms of idf(t) * tf*(k1+1) / (tf + k1*(1-b+b*len/avg)),
    // idf(t) = ln((N - n_t + 0.5)/(n_t + 0.5) + 1).
    double bm25_score(const std::vector<std::string>& query_terms,
                      const std::string& snippet_id) const;

    // Top-k over documents containing at least one query term. An empty
    // query (after tokenization) yields an empty list.
    RankedList search(const std::string& query, size_t k) const;

    void save(const std::filesystem::path& dir) const;
    static LexicalIndex load(const std::filesystem::path& dir);

    size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<Snippet>& snippets() const { return snippets_; }
    const std::map<std::string, std::vector<std::pair<uint32_t, uint32_t>>>& postings() const {
        return postings_;
    }
    const std::vector<uint32_t>& doc_lengths() const { return doc_lengths_; }

private:
    double score_one(const std::vector<std::string>& query_terms, uint32_t ordinal) const;
    int ordinal_of(const std::string& snippet_id) const; // -1 when unknown

    Bm25Params params_;
    std::vector<Snippet> snippets_;        // ascending id; ordinal = position
    std::vector<std::string> doc_ids_;     // snippets_[i].id, kept for binary search
    std::vector<uint32_t> doc_lengths_;    // tokenizer token counts
    double avg_doc_length_ = 0.0;
    // term -> (doc ordinal, term frequency), ordinals ascending
    std::map<std::string, std::vector<std::pair<uint32_t, uint32_t>>> postings_;
};

}  // namespace chemrag
