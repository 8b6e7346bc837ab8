#include "chemrag/corpus.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "chemrag/errors.hpp"
#include "chemrag/util.hpp"

namespace chemrag {

namespace {

using nlohmann::json;

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Blank-line separated paragraphs, already normalized; empty ones dropped.
std::vector<std::string> split_paragraphs(const std::string& body) {
    std::vector<std::string> paragraphs;
    std::string current;
    std::istringstream in(body);
    std::string line;
    auto flush = [&]() {
        std::string norm = normalize_text(current);
        if (!norm.empty()) paragraphs.push_back(std::move(norm));
        current.clear();
    };
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            flush();
        } else {
            if (!current.empty()) current += ' ';
            current += line;
        }
    }
    flush();
    return paragraphs;
}

std::string render_pubchem_body(const json& row) {
    auto field = [&](const char* key) -> std::string {
        if (!row.contains(key) || row[key].is_null()) return "";
        if (row[key].is_string()) return row[key].get<std::string>();
        if (row[key].is_number()) {
            std::ostringstream oss;
            oss << row[key];
            return oss.str();
        }
        return "";
    };
    std::vector<std::pair<std::string, std::string>> parts;
    parts.emplace_back("Name", field("name"));
    parts.emplace_back("SMILES", field("smiles"));
    parts.emplace_back("IUPAC name", field("iupac_name"));
    parts.emplace_back("Molecular formula", field("molecular_formula"));
    parts.emplace_back("Molecular weight", field("molecular_weight"));
    std::string synonyms;
    if (row.contains("synonyms") && row["synonyms"].is_array()) {
        for (const auto& s : row["synonyms"]) {
            if (!s.is_string()) continue;
            if (!synonyms.empty()) synonyms += "; ";
            synonyms += s.get<std::string>();
        }
    }
    parts.emplace_back("Synonyms", synonyms);

    std::string body;
    for (const auto& [label, value] : parts) {
        if (value.empty()) continue;
        if (!body.empty()) body += " ";
        body += label + ": " + value;
    }
    return body;
}

}  // namespace

std::string to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::pubchem: return "pubchem";
        case SourceKind::pubmed: return "pubmed";
        case SourceKind::uspto: return "uspto";
        case SourceKind::semantic_scholar: return "semantic_scholar";
        case SourceKind::openstax: return "openstax";
        case SourceKind::wikipedia: return "wikipedia";
    }
    throw ValidationError("unknown source kind");
}

SourceKind source_kind_from_string(const std::string& name) {
    for (SourceKind kind : kAllSources)
        if (to_string(kind) == name) return kind;
    throw ValidationError("unknown source kind: " + name);
}

json Snippet::to_json() const {
    json j;
    j["id"] = id;
    j["source"] = to_string(source);
    if (title) j["title"] = *title;
    j["text"] = text;
    return j;
}

Snippet Snippet::from_json(const json& j) {
    Snippet s;
    s.id = j.at("id").get<std::string>();
    s.source = source_kind_from_string(j.at("source").get<std::string>());
    if (j.contains("title") && j["title"].is_string()) s.title = j["title"].get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.token_count = count_whitespace_tokens(s.text);
    return s;
}

json CorpusManifest::to_json() const {
    json j;
    j["created_at"] = created_at;
    if (chunking) {
        j["chunking"]["max_tokens"] = chunking->max_tokens;
        j["chunking"]["paragraph_boundary"] = chunking->paragraph_boundary;
    }
    json sources_json = json::object();
    for (const auto& [kind, stats] : sources) {
        sources_json[to_string(kind)] = {{"count", stats.count}, {"mean_tokens", stats.mean_tokens}};
    }
    j["sources"] = sources_json;
    j["total_snippets"] = total_snippets;
    return j;
}

std::string snippet_id(SourceKind source, const std::string& normalized_text) {
    return sha256_hex(to_string(source) + '\x1f' + normalized_text);
}

std::vector<Snippet> chunk_document(const RawDocument& doc, const ChunkingParams& params) {
    if (params.max_tokens < 32) throw ValidationError("chunking max_tokens must be >= 32");

    std::vector<std::string> paragraphs;
    if (params.paragraph_boundary) {
        paragraphs = split_paragraphs(doc.body);
    } else {
        std::string norm = normalize_text(doc.body);
        if (!norm.empty()) paragraphs.push_back(std::move(norm));
    }

    std::vector<std::string> chunk_texts;
    std::string current;
    size_t current_tokens = 0;
    auto flush = [&]() {
        if (!current.empty()) chunk_texts.push_back(std::move(current));
        current.clear();
        current_tokens = 0;
    };
    for (const std::string& para : paragraphs) {
        size_t tokens = count_whitespace_tokens(para);
        if (tokens > params.max_tokens) {
            // oversize paragraph: cut at token boundaries
            flush();
            std::vector<std::string> words = split_whitespace(para);
            for (size_t i = 0; i < words.size(); i += params.max_tokens) {
                std::string piece;
                size_t end = std::min(words.size(), i + params.max_tokens);
                for (size_t w = i; w < end; ++w) {
                    if (!piece.empty()) piece += ' ';
                    piece += words[w];
                }
                chunk_texts.push_back(std::move(piece));
            }
            continue;
        }
        if (current_tokens + tokens > params.max_tokens) flush();
        if (!current.empty()) current += ' ';
        current += para;
        current_tokens += tokens;
    }
    flush();

    std::vector<Snippet> out;
    out.reserve(chunk_texts.size());
    for (std::string& text : chunk_texts) {
        Snippet s;
        s.source = doc.source;
        s.title = doc.title;
        s.token_count = count_whitespace_tokens(text);
        s.text = std::move(text);
        s.id = snippet_id(s.source, s.text);
        out.push_back(std::move(s));
    }
    return out;
}

RawDocument raw_document_from_json(const json& row, std::optional<SourceKind> forced_source) {
    if (!row.is_object()) throw ValidationError("record is not a JSON object");
    RawDocument doc;
    if (row.contains("source"))
        doc.source = source_kind_from_string(row.at("source").get<std::string>());
    else if (forced_source)
        doc.source = *forced_source;
    else
        throw ValidationError("record lacks a source field");
    if (forced_source && doc.source != *forced_source)
        throw ValidationError("record source disagrees with --source");
    doc.external_id = row.value("external_id", "");
    if (row.contains("title") && row["title"].is_string())
        doc.title = row["title"].get<std::string>();
    if (row.contains("body") && row["body"].is_string()) doc.body = row["body"].get<std::string>();
    if (doc.source == SourceKind::pubchem && trim(doc.body).empty())
        doc.body = render_pubchem_body(row);
    return doc;
}

IngestStats ingest_source(const std::filesystem::path& raw_jsonl, SourceKind source,
                          const ChunkingParams& params,
                          const std::function<void(Snippet&&)>& sink,
                          const std::function<void(const IngestError&)>& on_error) {
    std::ifstream in(raw_jsonl);
    if (!in) throw NotFoundError("cannot open raw documents: " + raw_jsonl.string());

    IngestStats stats;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        RawDocument doc;
        try {
            json row = json::parse(line);
            doc = raw_document_from_json(row, source);
        } catch (const std::exception& e) {
            stats.malformed++;
            if (on_error) {
                IngestError err;
                err.line_no = line_no;
                err.message = e.what();
                // best-effort id recovery for the error report
                try {
                    json row = json::parse(line);
                    err.external_id = row.value("external_id", "");
                } catch (...) {
                }
                on_error(err);
            }
            continue;
        }
        if (trim(doc.body).empty()) {
            stats.skipped_empty++;
            continue;
        }
        stats.documents++;
        for (Snippet& s : chunk_document(doc, params)) {
            stats.snippets++;
            sink(std::move(s));
        }
    }
    return stats;
}

std::vector<Snippet> dedup_snippets(std::vector<Snippet> snippets) {
    std::unordered_set<std::string> seen;
    std::vector<Snippet> out;
    out.reserve(snippets.size());
    for (Snippet& s : snippets) {
        if (seen.insert(s.id).second) out.push_back(std::move(s));
    }
    return out;
}

void write_snippet_store(const std::filesystem::path& path,
                         const std::vector<Snippet>& snippets) {
    std::ostringstream oss;
    for (const Snippet& s : snippets) oss << s.to_json().dump() << '\n';
    atomic_write_file(path, oss.str());
}

std::vector<Snippet> load_snippet_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("snippet store not found: " + path.string());
    std::vector<Snippet> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(Snippet::from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ValidationError("snippet store line " + std::to_string(line_no) + ": " +
                                  e.what());
        }
    }
    return out;
}

CorpusManifest corpus_stats(const std::filesystem::path& store_path,
                            std::optional<ChunkingParams> chunking) {
    std::vector<Snippet> snippets = load_snippet_store(store_path);
    CorpusManifest manifest;
    manifest.created_at = now_iso8601();
    manifest.chunking = chunking;
    manifest.total_snippets = snippets.size();
    std::map<SourceKind, std::pair<size_t, size_t>> acc; // count, token sum
    for (const Snippet& s : snippets) {
        acc[s.source].first++;
        acc[s.source].second += s.token_count;
    }
    for (SourceKind kind : kAllSources) {
        SourceStats stats;
        if (auto it = acc.find(kind); it != acc.end()) {
            stats.count = it->second.first;
            stats.mean_tokens = static_cast<double>(it->second.second) /
                                static_cast<double>(it->second.first);
        }
        manifest.sources[kind] = stats;
    }
    return manifest;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& store_path) {
    std::filesystem::path p = store_path;
    p += ".manifest.json";
    return p;
}

}  // namespace chemrag
