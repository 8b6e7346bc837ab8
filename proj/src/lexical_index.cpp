#include "chemrag/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "chemrag/tokenizer.hpp"
#include "index_io.hpp"

namespace chemrag {

namespace {
constexpr const char* kPostingsMagic = "CRPOSTv1";
}

LexicalIndex LexicalIndex::build(std::vector<Snippet> snippets, Bm25Params params) {
    if (snippets.empty()) throw EmptyCorpusError("cannot build a lexical index over zero snippets");
    if (params.k1 <= 0.0) throw ValidationError("bm25 k1 must be > 0");
    if (params.b < 0.0 || params.b > 1.0) throw ValidationError("bm25 b must be in [0, 1]");

    LexicalIndex index;
    index.params_ = params;
    std::sort(snippets.begin(), snippets.end(),
              [](const Snippet& a, const Snippet& b) { return a.id < b.id; });
    snippets.erase(std::unique(snippets.begin(), snippets.end(),
                               [](const Snippet& a, const Snippet& b) { return a.id == b.id; }),
                   snippets.end());
    index.snippets_ = std::move(snippets);

    uint64_t total_len = 0;
    for (uint32_t ordinal = 0; ordinal < index.snippets_.size(); ++ordinal) {
        const Snippet& s = index.snippets_[ordinal];
        index.doc_ids_.push_back(s.id);
        std::vector<std::string> tokens = tokenize(s.text);
        index.doc_lengths_.push_back(static_cast<uint32_t>(tokens.size()));
        total_len += tokens.size();
        std::unordered_map<std::string, uint32_t> tf;
        for (std::string& t : tokens) tf[std::move(t)]++;
        for (auto& [term, count] : tf) index.postings_[term].emplace_back(ordinal, count);
    }
    for (auto& [term, posting] : index.postings_) std::sort(posting.begin(), posting.end());
    index.avg_doc_length_ =
        static_cast<double>(total_len) / static_cast<double>(index.snippets_.size());
    return index;
}

int LexicalIndex::ordinal_of(const std::string& snippet_id) const {
    auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), snippet_id);
    if (it == doc_ids_.end() || *it != snippet_id) return -1;
    return static_cast<int>(it - doc_ids_.begin());
}

double LexicalIndex::score_one(const std::vector<std::string>& query_terms,
                               uint32_t ordinal) const {
    double n = static_cast<double>(doc_ids_.size());
    double len = static_cast<double>(doc_lengths_[ordinal]);
    double norm = params_.k1 * (1.0 - params_.b + params_.b * len / avg_doc_length_);
    double score = 0.0;
    for (const std::string& term : query_terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& posting = it->second;
        auto hit = std::lower_bound(posting.begin(), posting.end(),
                                    std::make_pair(ordinal, uint32_t{0}));
        if (hit == posting.end() || hit->first != ordinal) continue;
        double n_t = static_cast<double>(posting.size());
        double idf = std::log((n - n_t + 0.5) / (n_t + 0.5) + 1.0);
        double tf = static_cast<double>(hit->second);
        score += idf * tf * (params_.k1 + 1.0) / (tf + norm);
    }
    return score;
}

double LexicalIndex::bm25_score(const std::vector<std::string>& query_terms,
                                const std::string& snippet_id) const {
    int ordinal = ordinal_of(snippet_id);
    if (ordinal < 0) throw NotFoundError("snippet not in index: " + snippet_id);
    return score_one(query_terms, static_cast<uint32_t>(ordinal));
}

RankedList LexicalIndex::search(const std::string& query, size_t k) const {
    if (k < 1) throw ValidationError("k must be >= 1");
    std::vector<std::string> terms = tokenize(query);
    if (terms.empty()) return {};

    // accumulate per document in query-term order; documents without any
    // query term never become candidates
    std::vector<double> scores(doc_ids_.size(), 0.0);
    std::vector<char> touched(doc_ids_.size(), 0);
    double n = static_cast<double>(doc_ids_.size());
    for (const std::string& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& posting = it->second;
        double n_t = static_cast<double>(posting.size());
        double idf = std::log((n - n_t + 0.5) / (n_t + 0.5) + 1.0);
        for (auto [ordinal, tf_int] : posting) {
            double len = static_cast<double>(doc_lengths_[ordinal]);
            double norm = params_.k1 * (1.0 - params_.b + params_.b * len / avg_doc_length_);
            double tf = static_cast<double>(tf_int);
            scores[ordinal] += idf * tf * (params_.k1 + 1.0) / (tf + norm);
            touched[ordinal] = 1;
        }
    }
    std::vector<ScoredId> scored;
    for (size_t i = 0; i < scores.size(); ++i)
        if (touched[i]) scored.push_back({doc_ids_[i], scores[i]});
    return RankedList::from_scores(std::move(scored), k);
}

void LexicalIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_snippet_store(dir / "snippets.jsonl", snippets_);

    std::string docs;
    for (size_t i = 0; i < doc_ids_.size(); ++i) {
        nlohmann::json row = {{"id", doc_ids_[i]}, {"len", doc_lengths_[i]}};
        docs += row.dump();
        docs += '\n';
    }
    atomic_write_file(dir / "docs.jsonl", docs);

    std::string buf;
    buf.append(kPostingsMagic);
    index_io::put_raw<uint64_t>(buf, postings_.size());
    for (const auto& [term, posting] : postings_) {
        index_io::put_string(buf, term);
        index_io::put_raw<uint64_t>(buf, posting.size());
        for (auto [ordinal, tf] : posting) {
            index_io::put_raw<uint32_t>(buf, ordinal);
            index_io::put_raw<uint32_t>(buf, tf);
        }
    }
    atomic_write_file(dir / "postings.bin", buf);

    // header last: a complete header implies complete data files
    nlohmann::json header;
    header["kind"] = "lexical";
    header["bm25"] = {{"k1", params_.k1}, {"b", params_.b}};
    header["doc_count"] = doc_ids_.size();
    header["avg_doc_length"] = avg_doc_length_;
    index_io::write_header(dir, header);
}

LexicalIndex LexicalIndex::load(const std::filesystem::path& dir) {
    nlohmann::json header = index_io::read_header(dir);
    if (header.value("kind", "") != "lexical")
        throw ConfigError(dir.string() + " is not a lexical index (kind=" +
                          header.value("kind", "?") + ")");

    LexicalIndex index;
    index.params_.k1 = header.at("bm25").at("k1").get<double>();
    index.params_.b = header.at("bm25").at("b").get<double>();
    index.avg_doc_length_ = header.at("avg_doc_length").get<double>();
    index.snippets_ = load_snippet_store(dir / "snippets.jsonl");

    for (const std::string& line : read_lines(dir / "docs.jsonl")) {
        if (trim(line).empty()) continue;
        nlohmann::json row = nlohmann::json::parse(line);
        index.doc_ids_.push_back(row.at("id").get<std::string>());
        index.doc_lengths_.push_back(row.at("len").get<uint32_t>());
    }
    if (index.doc_ids_.size() != header.at("doc_count").get<size_t>() ||
        index.doc_ids_.size() != index.snippets_.size())
        throw IntegrityError("doc table disagrees with header in " + dir.string());

    index_io::Reader reader(dir / "postings.bin");
    reader.expect_magic(kPostingsMagic);
    uint64_t term_count = reader.get_raw<uint64_t>();
    for (uint64_t t = 0; t < term_count; ++t) {
        std::string term = reader.get_string();
        uint64_t count = reader.get_raw<uint64_t>();
        auto& posting = index.postings_[term];
        posting.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            uint32_t ordinal = reader.get_raw<uint32_t>();
            uint32_t tf = reader.get_raw<uint32_t>();
            posting.emplace_back(ordinal, tf);
        }
    }
    if (!reader.at_end()) throw IntegrityError("trailing bytes in postings.bin");
    return index;
}

}  // namespace chemrag
