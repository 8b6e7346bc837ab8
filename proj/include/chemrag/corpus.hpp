#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chemrag {

enum class SourceKind { pubchem, pubmed, uspto, semantic_scholar, openstax, wikipedia };

constexpr std::array<SourceKind, 6> kAllSources = {
    SourceKind::pubchem,   SourceKind::pubmed,   SourceKind::uspto,
    SourceKind::semantic_scholar, SourceKind::openstax, SourceKind::wikipedia,
};

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& name);

struct RawDocument {
    SourceKind source = SourceKind::wikipedia;
    std::string external_id;
    std::optional<std::string> title;
    std::string body;
};

struct Snippet {
    std::string id; // content-addressed: sha256(source, normalized text)
    SourceKind source = SourceKind::wikipedia;
    std::optional<std::string> title;
    std::string text; // normalized
    size_t token_count = 0;

    nlohmann::json to_json() const;
    static Snippet from_json(const nlohmann::json& j);
};

struct ChunkingParams {
    size_t max_tokens = 512;
    bool paragraph_boundary = true; // prefer splits at blank-line boundaries
};

struct SourceStats {
    size_t count = 0;
    double mean_tokens = 0.0;
};

struct CorpusManifest {
    std::string created_at; // ISO 8601 UTC
    std::optional<ChunkingParams> chunking;
    std::map<SourceKind, SourceStats> sources;
    size_t total_snippets = 0;

    nlohmann::json to_json() const;
};

std::string snippet_id(SourceKind source, const std::string& normalized_text);

// Splits one document into snippets of at most max_tokens whitespace tokens.
// Paragraphs (blank-line separated) are greedily packed; a paragraph that
// exceeds the budget is cut at token boundaries. Concatenating the snippet
// texts with single spaces recovers the body modulo whitespace normalization.
std::vector<Snippet> chunk_document(const RawDocument& doc, const ChunkingParams& params);

// One RawDocument per input JSONL row. PubChem rows may carry structured
// compound fields instead of a body; they are rendered in the fixed order
// name, SMILES, IUPAC name, molecular formula, weight, synonyms.
RawDocument raw_document_from_json(const nlohmann::json& row,
                                   std::optional<SourceKind> forced_source = std::nullopt);

struct IngestStats {
    size_t documents = 0;
    size_t snippets = 0;
    size_t skipped_empty = 0;
    size_t malformed = 0;
};

struct IngestError {
    size_t line_no = 0;
    std::string external_id;
    std::string message;
};

// Streams raw JSONL rows through chunking. Malformed rows are reported via
// on_error and skipped; empty bodies count as skipped. Emitted snippets are
// not deduplicated here (see dedup_snippets).
IngestStats ingest_source(const std::filesystem::path& raw_jsonl, SourceKind source,
                          const ChunkingParams& params,
                          const std::function<void(Snippet&&)>& sink,
                          const std::function<void(const IngestError&)>& on_error = nullptr);

// Keeps the first occurrence of every (source, normalized text) pair.
std::vector<Snippet> dedup_snippets(std::vector<Snippet> snippets);

void write_snippet_store(const std::filesystem::path& path,
                         const std::vector<Snippet>& snippets);
std::vector<Snippet> load_snippet_store(const std::filesystem::path& path);

// Recomputes per-source counts and mean token lengths by scanning the store.
CorpusManifest corpus_stats(const std::filesystem::path& store_path,
                            std::optional<ChunkingParams> chunking = std::nullopt);

std::filesystem::path manifest_path_for(const std::filesystem::path& store_path);

}  // namespace chemrag
