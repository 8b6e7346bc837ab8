#include "chemrag/retriever.hpp"

#include <algorithm>

#include "index_io.hpp"

namespace chemrag {

Retriever::Retriever(RetrieverSetup setup, Gateway& gateway)
    : setup_(std::move(setup)), gateway_(gateway) {}

std::filesystem::path Retriever::dir_for(const std::string& id) const {
    auto it = setup_.index_dirs.find(id);
    if (it == setup_.index_dirs.end())
        throw ConfigError("no index configured for retriever '" + id +
                          "'; build one with: chemrag index build --kind " +
                          (id == "bm25" ? "lexical" : "dense --embedder " + id));
    return it->second;
}

void Retriever::absorb_snippets(const std::vector<Snippet>& snippets) {
    for (const Snippet& s : snippets) snippets_.emplace(s.id, s);
}

const LexicalIndex& Retriever::lexical(const std::string& id) {
    auto it = lexical_.find(id);
    if (it == lexical_.end()) {
        it = lexical_.emplace(id, LexicalIndex::load(dir_for(id))).first;
        absorb_snippets(it->second.snippets());
    }
    return it->second;
}

const DenseIndex& Retriever::dense(const std::string& id) {
    auto it = dense_.find(id);
    if (it == dense_.end()) {
        it = dense_.emplace(id, DenseIndex::load(dir_for(id))).first;
        absorb_snippets(it->second.snippets());
    }
    return it->second;
}

void Retriever::preload(const std::string& spec) {
    if (spec == "rrf") {
        for (const std::string& id : rrf_component_ids()) dir_for(id); // fail early, by name
        for (const std::string& id : rrf_component_ids()) {
            if (id == "bm25")
                lexical(id);
            else
                dense(id);
        }
        return;
    }
    if (spec == "bm25") {
        lexical(spec);
        return;
    }
    dense(spec);
}

RankedList Retriever::ranked(const std::string& spec, const std::string& query, size_t k) {
    if (spec == "bm25") return lexical(spec).search(query, k);
    if (spec == "rrf") {
        std::vector<RankedList> component_lists;
        for (const std::string& id : rrf_component_ids()) dir_for(id); // fail early, by name
        for (const std::string& id : rrf_component_ids()) {
            if (id == "bm25") {
                component_lists.push_back(lexical(id).search(query, setup_.fusion_depth));
            } else {
                const DenseIndex& index = dense(id);
                auto embedder = gateway_.embedder_for(index.embedder_profile());
                component_lists.push_back(index.search(query, setup_.fusion_depth, *embedder));
            }
        }
        return fuse_rrf(component_lists, setup_.fusion, k);
    }
    // any other id is a dense retriever slot
    const DenseIndex& index = dense(spec);
    auto embedder = gateway_.embedder_for(index.embedder_profile());
    return index.search(query, k, *embedder);
}

std::vector<RetrievedSnippet> Retriever::retrieve(const std::string& spec,
                                                  const std::string& query, size_t k) {
    RankedList list = ranked(spec, query, k);
    std::vector<RetrievedSnippet> out;
    out.reserve(list.items.size());
    for (const ScoredId& item : list.items)
        out.push_back({snippet_by_id(item.id), item.score});
    return out;
}

const Snippet& Retriever::snippet_by_id(const std::string& id) const {
    auto it = snippets_.find(id);
    if (it == snippets_.end()) throw NotFoundError("snippet not found in loaded indexes: " + id);
    return it->second;
}

}  // namespace chemrag
