#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chemrag/corpus.hpp"
#include "chemrag/ranked_list.hpp"

namespace chemrag {

// Text-to-vector backend (an embedding-endpoint profile or the hash32 stub).
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string profile() const = 0;
};

// Exact brute-force cosine index over unit vectors. No approximate search:
// results are always identical to scoring every stored vector.
class DenseIndex {
public:
    static DenseIndex build(std::vector<Snippet> snippets, Embedder& embedder);

    // Exact top-k by dot product (cosine on unit vectors). The embedder's
    // profile must match the one the index was built with.
    RankedList search(const std::string& query, size_t k, Embedder& embedder) const;

    void save(const std::filesystem::path& dir) const;
    static DenseIndex load(const std::filesystem::path& dir);

    size_t doc_count() const { return doc_ids_.size(); }
    size_t dim() const { return dim_; }
    const std::string& embedder_profile() const { return embedder_profile_; }
    const std::vector<Snippet>& snippets() const { return snippets_; }
    const std::vector<double>& vector_of(size_t ordinal) const { return vectors_[ordinal]; }

private:
    std::string embedder_profile_;
    size_t dim_ = 0;
    std::vector<Snippet> snippets_;    // ascending id; ordinal = position
    std::vector<std::string> doc_ids_;
    std::vector<std::vector<double>> vectors_; // unit L2 norm
};

}  // namespace chemrag
