#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "chemrag/dense_index.hpp"
#include "chemrag/fusion.hpp"
#include "chemrag/gateway.hpp"
#include "chemrag/lexical_index.hpp"

namespace chemrag {

struct RetrievedSnippet {
    Snippet snippet;
    double score = 0.0;
};

struct RetrieverSetup {
    // retriever id ("bm25", "contriever", "specter", "e5") -> index directory
    std::map<std::string, std::filesystem::path> index_dirs;
    FusionParams fusion;
    size_t fusion_depth = 100; // per-component truncation before fusing
};

inline const std::vector<std::string>& rrf_component_ids() {
    static const std::vector<std::string> ids = {"bm25", "contriever", "specter", "e5"};
    return ids;
}

// Uniform retrieve(spec, query, k) over the configured retrievers. "rrf"
// fuses the four component retrievers, each truncated at fusion_depth.
// Indices are loaded lazily and kept for the lifetime of the retriever.
class Retriever {
public:
    Retriever(RetrieverSetup setup, Gateway& gateway);

    std::vector<RetrievedSnippet> retrieve(const std::string& spec, const std::string& query,
                                           size_t k);
    RankedList ranked(const std::string& spec, const std::string& query, size_t k);
    const Snippet& snippet_by_id(const std::string& id) const;

    // Loads every index the spec needs up front. Required before concurrent
    // retrieve() calls: loaded indices are immutable, lazy loading is not.
    void preload(const std::string& spec);

private:
    const LexicalIndex& lexical(const std::string& id);
    const DenseIndex& dense(const std::string& id);
    std::filesystem::path dir_for(const std::string& id) const;
    void absorb_snippets(const std::vector<Snippet>& snippets);

    RetrieverSetup setup_;
    Gateway& gateway_;
    std::map<std::string, LexicalIndex> lexical_;
    std::map<std::string, DenseIndex> dense_;
    std::unordered_map<std::string, Snippet> snippets_;
};

}  // namespace chemrag
