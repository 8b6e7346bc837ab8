#include "chemrag/dense_index.hpp"

#include <algorithm>
#include <cmath>

#include "index_io.hpp"

namespace chemrag {

namespace {

constexpr const char* kVectorsMagic = "CRVECv1\0";
constexpr size_t kVectorsMagicLen = 8;

std::vector<double> normalize_or_throw(std::vector<double> v, const std::string& what) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    double norm = std::sqrt(norm_sq);
    if (!(norm > 1e-12)) throw IntegrityError("degenerate embedding for " + what);
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace

DenseIndex DenseIndex::build(std::vector<Snippet> snippets, Embedder& embedder) {
    if (snippets.empty()) throw EmptyCorpusError("cannot build a dense index over zero snippets");
    std::sort(snippets.begin(), snippets.end(),
              [](const Snippet& a, const Snippet& b) { return a.id < b.id; });
    snippets.erase(std::unique(snippets.begin(), snippets.end(),
                               [](const Snippet& a, const Snippet& b) { return a.id == b.id; }),
                   snippets.end());

    DenseIndex index;
    index.embedder_profile_ = embedder.profile();
    index.snippets_ = std::move(snippets);

    std::vector<std::string> texts;
    texts.reserve(index.snippets_.size());
    for (const Snippet& s : index.snippets_) {
        index.doc_ids_.push_back(s.id);
        texts.push_back(s.text);
    }
    std::vector<std::vector<double>> raw = embedder.embed(texts);
    if (raw.size() != texts.size())
        throw IntegrityError("embedder returned " + std::to_string(raw.size()) + " vectors for " +
                             std::to_string(texts.size()) + " texts");
    index.dim_ = raw.empty() ? 0 : raw.front().size();
    index.vectors_.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != index.dim_)
            throw IntegrityError("embedding dimension drift at snippet " + index.doc_ids_[i]);
        index.vectors_.push_back(normalize_or_throw(std::move(raw[i]), index.doc_ids_[i]));
    }
    return index;
}

RankedList DenseIndex::search(const std::string& query, size_t k, Embedder& embedder) const {
    if (k < 1) throw ValidationError("k must be >= 1");
    if (embedder.profile() != embedder_profile_)
        throw ConfigError("embedder profile '" + embedder.profile() +
                          "' does not match index profile '" + embedder_profile_ + "'");
    std::vector<std::vector<double>> q = embedder.embed({query});
    if (q.size() != 1 || q.front().size() != dim_)
        throw IntegrityError("query embedding has wrong shape");
    std::vector<double> qv = normalize_or_throw(std::move(q.front()), "query");

    std::vector<ScoredId> scored;
    scored.reserve(doc_ids_.size());
    for (size_t i = 0; i < vectors_.size(); ++i) {
        double dot = 0.0;
        for (size_t d = 0; d < dim_; ++d) dot += qv[d] * vectors_[i][d];
        scored.push_back({doc_ids_[i], dot});
    }
    return RankedList::from_scores(std::move(scored), k);
}

void DenseIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_snippet_store(dir / "snippets.jsonl", snippets_);

    std::string buf;
    buf.append(kVectorsMagic, kVectorsMagicLen);
    index_io::put_raw<uint32_t>(buf, static_cast<uint32_t>(dim_));
    index_io::put_raw<uint64_t>(buf, vectors_.size());
    for (const auto& v : vectors_)
        for (double x : v) index_io::put_raw<double>(buf, x);
    atomic_write_file(dir / "vectors.bin", buf);

    // header last: a complete header implies complete data files
    nlohmann::json header;
    header["kind"] = "dense";
    header["embedder_profile"] = embedder_profile_;
    header["dim"] = dim_;
    header["doc_count"] = doc_ids_.size();
    index_io::write_header(dir, header);
}

DenseIndex DenseIndex::load(const std::filesystem::path& dir) {
    nlohmann::json header = index_io::read_header(dir);
    if (header.value("kind", "") != "dense")
        throw ConfigError(dir.string() + " is not a dense index (kind=" +
                          header.value("kind", "?") + ")");

    DenseIndex index;
    index.embedder_profile_ = header.at("embedder_profile").get<std::string>();
    index.dim_ = header.at("dim").get<size_t>();
    index.snippets_ = load_snippet_store(dir / "snippets.jsonl");
    for (const Snippet& s : index.snippets_) index.doc_ids_.push_back(s.id);

    index_io::Reader reader(dir / "vectors.bin");
    reader.expect_magic(std::string(kVectorsMagic, kVectorsMagicLen));
    uint32_t dim = reader.get_raw<uint32_t>();
    uint64_t count = reader.get_raw<uint64_t>();
    if (dim != index.dim_ || count != index.doc_ids_.size())
        throw IntegrityError("vector table disagrees with header in " + dir.string());
    index.vectors_.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
        index.vectors_[i].resize(dim);
        for (uint32_t d = 0; d < dim; ++d) index.vectors_[i][d] = reader.get_raw<double>();
    }
    if (!reader.at_end()) throw IntegrityError("trailing bytes in vectors.bin");
    return index;
}

}  // namespace chemrag
