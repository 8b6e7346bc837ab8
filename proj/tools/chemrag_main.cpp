// chemrag: corpus ingestion, index building, retrieval, benchmark runs, and
// molecule utilities behind one binary. Machine-readable output goes to
// stdout as JSON/JSONL; human summaries go to stderr.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "chemrag/corpus.hpp"
#include "chemrag/dense_index.hpp"
#include "chemrag/fingerprints.hpp"
#include "chemrag/fusion.hpp"
#include "chemrag/gateway.hpp"
#include "chemrag/harness.hpp"
#include "chemrag/lexical_index.hpp"
#include "chemrag/retriever.hpp"
#include "chemrag/smiles.hpp"
#include "chemrag/text_metrics.hpp"
#include "chemrag/util.hpp"

namespace {

using nlohmann::json;

struct GlobalOptions {
    std::string config_path;
    std::string cache_dir;
    bool verbose = false;
};

chemrag::Gateway make_gateway(const GlobalOptions& options) {
    chemrag::GatewayConfig cfg;
    if (!options.config_path.empty())
        cfg = chemrag::gateway_config_from_json(
            json::parse(chemrag::read_file(options.config_path)));
    if (!options.cache_dir.empty()) cfg.cache_dir = options.cache_dir;
    return chemrag::Gateway(std::move(cfg));
}

void log_verbose(const GlobalOptions& options, const std::string& message) {
    if (options.verbose) std::cerr << message << "\n";
}

int cmd_ingest(const GlobalOptions& options, const std::string& in_path,
               const std::string& source_name, const std::string& out_path, size_t max_tokens,
               bool paragraph_boundary, bool append) {
    chemrag::SourceKind source = chemrag::source_kind_from_string(source_name);
    chemrag::ChunkingParams params;
    params.max_tokens = max_tokens;
    params.paragraph_boundary = paragraph_boundary;

    std::vector<chemrag::Snippet> snippets;
    if (append && std::filesystem::exists(out_path))
        snippets = chemrag::load_snippet_store(out_path);

    size_t errors = 0;
    chemrag::IngestStats stats = chemrag::ingest_source(
        in_path, source, params,
        [&](chemrag::Snippet&& s) { snippets.push_back(std::move(s)); },
        [&](const chemrag::IngestError& err) {
            ++errors;
            std::cerr << "record error at line " << err.line_no;
            if (!err.external_id.empty()) std::cerr << " (external_id " << err.external_id << ")";
            std::cerr << ": " << err.message << "\n";
        });

    snippets = chemrag::dedup_snippets(std::move(snippets));
    chemrag::write_snippet_store(out_path, snippets);
    chemrag::CorpusManifest manifest = chemrag::corpus_stats(out_path, params);
    chemrag::atomic_write_file(chemrag::manifest_path_for(out_path),
                               manifest.to_json().dump(2) + "\n");

    std::cerr << "ingested " << stats.documents << " documents into " << snippets.size()
              << " snippets (" << stats.skipped_empty << " empty skipped, " << stats.malformed
              << " malformed)\n";
    std::cout << manifest.to_json().dump() << "\n";
    log_verbose(options, "store: " + out_path);
    return 0;
}

int cmd_index_build(const GlobalOptions& options, const std::string& corpus_path,
                    const std::string& kind, const std::string& embedder_name,
                    const std::string& out_dir, double k1, double b) {
    std::vector<chemrag::Snippet> snippets = chemrag::load_snippet_store(corpus_path);
    if (kind == "lexical") {
        chemrag::Bm25Params params;
        params.k1 = k1;
        params.b = b;
        chemrag::LexicalIndex index = chemrag::LexicalIndex::build(std::move(snippets), params);
        index.save(out_dir);
        std::cerr << "lexical index: " << index.doc_count() << " docs, avg length "
                  << index.avg_doc_length() << "\n";
    } else if (kind == "dense") {
        if (embedder_name.empty())
            throw chemrag::ValidationError("dense index needs --embedder <profile>");
        chemrag::Gateway gateway = make_gateway(options);
        auto embedder = gateway.embedder_for(embedder_name);
        chemrag::DenseIndex index = chemrag::DenseIndex::build(std::move(snippets), *embedder);
        index.save(out_dir);
        std::cerr << "dense index: " << index.doc_count() << " docs, dim " << index.dim()
                  << ", profile " << index.embedder_profile() << "\n";
    } else {
        throw chemrag::ValidationError("--kind must be lexical or dense");
    }
    std::cout << json{{"index", out_dir}, {"kind", kind}}.dump() << "\n";
    return 0;
}

int cmd_retrieve(const GlobalOptions& options, const std::vector<std::string>& index_dirs,
                 const std::string& query, size_t k, unsigned rrf_c, size_t depth) {
    chemrag::Gateway gateway = make_gateway(options);

    struct Loaded {
        std::optional<chemrag::LexicalIndex> lexical;
        std::optional<chemrag::DenseIndex> dense;
    };
    std::vector<Loaded> indexes;
    std::unordered_map<std::string, chemrag::Snippet> by_id;
    for (const std::string& dir : index_dirs) {
        json header = json::parse(chemrag::read_file(std::filesystem::path(dir) / "header.json"));
        Loaded loaded;
        if (header.value("kind", "") == "lexical") {
            loaded.lexical = chemrag::LexicalIndex::load(dir);
            for (const auto& s : loaded.lexical->snippets()) by_id.emplace(s.id, s);
        } else {
            loaded.dense = chemrag::DenseIndex::load(dir);
            for (const auto& s : loaded.dense->snippets()) by_id.emplace(s.id, s);
        }
        indexes.push_back(std::move(loaded));
    }

    auto search_one = [&](Loaded& loaded, size_t want) -> chemrag::RankedList {
        if (loaded.lexical) return loaded.lexical->search(query, want);
        auto embedder = gateway.embedder_for(loaded.dense->embedder_profile());
        return loaded.dense->search(query, want, *embedder);
    };

    chemrag::RankedList result;
    if (indexes.size() == 1) {
        result = search_one(indexes.front(), k);
    } else {
        std::vector<chemrag::RankedList> lists;
        for (Loaded& loaded : indexes) lists.push_back(search_one(loaded, depth));
        result = chemrag::fuse_rrf(lists, chemrag::FusionParams{rrf_c}, k);
    }

    for (size_t rank = 0; rank < result.items.size(); ++rank) {
        const auto& item = result.items[rank];
        const chemrag::Snippet& s = by_id.at(item.id);
        json row;
        row["rank"] = rank + 1;
        row["id"] = item.id;
        row["score"] = item.score;
        row["source"] = chemrag::to_string(s.source);
        if (s.title) row["title"] = *s.title;
        row["text"] = s.text;
        std::cout << row.dump() << "\n";
    }
    log_verbose(options, "retrieved " + std::to_string(result.items.size()) + " snippets");
    return 0;
}

int cmd_run(const GlobalOptions& options, const std::string& config_path,
            const std::string& out_override) {
    json config_json = json::parse(chemrag::read_file(config_path));
    chemrag::RunConfig config = chemrag::RunConfig::from_json(config_json);
    if (!out_override.empty()) config.out_dir = out_override;

    chemrag::GatewayConfig gateway_cfg;
    if (!options.config_path.empty())
        gateway_cfg = chemrag::gateway_config_from_json(
            json::parse(chemrag::read_file(options.config_path)));
    else if (config_json.contains("gateway"))
        gateway_cfg = chemrag::gateway_config_from_json(config_json["gateway"]);
    if (!options.cache_dir.empty())
        gateway_cfg.cache_dir = options.cache_dir;
    else if (gateway_cfg.cache_dir.empty() && config_json.contains("cache_dir"))
        gateway_cfg.cache_dir = config_json["cache_dir"].get<std::string>();
    chemrag::Gateway gateway(std::move(gateway_cfg));

    chemrag::Report report = chemrag::run_benchmark(config, gateway);
    std::cout << report.to_json().dump(2) << "\n";
    std::cerr << "run complete: overall " << report.overall << " over " << report.total_items
              << " items (" << report.errored_items << " errored, " << report.unparsed_items
              << " unparsed)\n";
    return 0;
}

int cmd_sweep(const GlobalOptions& options, const std::string& config_path, const std::string& ks,
              const std::string& out_override) {
    json config_json = json::parse(chemrag::read_file(config_path));
    chemrag::RunConfig config = chemrag::RunConfig::from_json(config_json);
    if (!out_override.empty()) config.out_dir = out_override;

    std::vector<size_t> k_values;
    for (const std::string& part : chemrag::split_whitespace(
             [&] {
                 std::string spaced = ks;
                 std::replace(spaced.begin(), spaced.end(), ',', ' ');
                 return spaced;
             }()))
        k_values.push_back(static_cast<size_t>(std::stoul(part)));

    chemrag::GatewayConfig gateway_cfg;
    if (!options.config_path.empty())
        gateway_cfg = chemrag::gateway_config_from_json(
            json::parse(chemrag::read_file(options.config_path)));
    else if (config_json.contains("gateway"))
        gateway_cfg = chemrag::gateway_config_from_json(config_json["gateway"]);
    if (!options.cache_dir.empty())
        gateway_cfg.cache_dir = options.cache_dir;
    else if (gateway_cfg.cache_dir.empty() && config_json.contains("cache_dir"))
        gateway_cfg.cache_dir = config_json["cache_dir"].get<std::string>();
    chemrag::Gateway gateway(std::move(gateway_cfg));

    std::vector<chemrag::SweepRow> rows = chemrag::k_sweep(config, k_values, gateway);
    std::cout << chemrag::sweep_csv(rows);
    std::cerr << "sweep complete: " << rows.size() << " rows -> "
              << (config.out_dir / "sweep.csv").string() << "\n";
    return 0;
}

int cmd_proportions(const GlobalOptions& options, const std::string& run_dir, size_t top_n) {
    chemrag::Gateway gateway = make_gateway(options);
    auto rows = chemrag::source_proportions(run_dir, gateway, top_n);
    std::cout << chemrag::proportions_csv(rows);
    std::cerr << "proportions over top " << top_n << " for " << rows.size() << " tasks\n";
    return 0;
}

int cmd_score_pair(const std::string& metric, const std::string& pred, const std::string& gold) {
    double value = 0.0;
    if (metric == "bleu") {
        value = chemrag::metrics::bleu(chemrag::metrics::prose_tokens(pred),
                                       chemrag::metrics::prose_tokens(gold));
    } else if (metric == "bleu_char") {
        value = chemrag::metrics::bleu(chemrag::metrics::char_tokens(pred),
                                       chemrag::metrics::char_tokens(gold));
    } else if (metric == "rouge_l") {
        value = chemrag::metrics::rouge_l(chemrag::metrics::prose_tokens(pred),
                                          chemrag::metrics::prose_tokens(gold));
    } else if (metric == "levenshtein") {
        value = chemrag::metrics::levenshtein_sim(pred, gold);
    } else if (metric == "numeric") {
        value = chemrag::metrics::numeric_match(std::stod(pred), std::stod(gold)) ? 1.0 : 0.0;
    } else if (metric == "choice") {
        value = chemrag::metrics::choice_accuracy(pred, gold) ? 1.0 : 0.0;
    } else {
        throw chemrag::ValidationError("unknown metric: " + metric);
    }
    std::cout << json{{"metric", metric}, {"value", value}}.dump() << "\n";
    return 0;
}

// Re-scores a persisted run from its stored responses, without touching the
// model endpoints.
int cmd_score_items(const std::string& run_dir) {
    json report_json = json::parse(chemrag::read_file(std::filesystem::path(run_dir) / "report.json"));
    chemrag::RunConfig config = chemrag::RunConfig::from_json(report_json.at("config"));

    std::map<std::string, chemrag::Question> questions;
    for (const auto& [dataset, path] : config.datasets) {
        chemrag::LoadOptions load;
        load.check_counts = config.check_counts;
        for (chemrag::Question& q : chemrag::load_dataset(path, dataset, load))
            questions[q.id] = std::move(q);
    }

    std::vector<chemrag::ItemResult> items = chemrag::load_items(run_dir);
    for (chemrag::ItemResult& item : items) {
        if (item.errored()) continue;
        auto it = questions.find(item.question_id);
        if (it == questions.end())
            throw chemrag::ValidationError("no question for item " + item.question_id);
        item.extracted.clear();
        item.scores.clear();
        std::map<std::string, std::pair<double, size_t>> acc;
        for (const std::string& response : item.responses) {
            std::string extracted = chemrag::extract_answer(response, it->second);
            item.extracted.push_back(extracted);
            for (const chemrag::ScoreValue& sv : chemrag::score_item(it->second, extracted)) {
                acc[sv.metric].first += sv.value;
                acc[sv.metric].second++;
            }
        }
        for (const auto& [metric, pair] : acc)
            item.scores[metric] = pair.first / static_cast<double>(pair.second);
    }

    std::ostringstream lines;
    for (const chemrag::ItemResult& item : items) lines << item.to_json().dump() << '\n';
    chemrag::atomic_write_file(std::filesystem::path(run_dir) / "items.jsonl", lines.str());
    chemrag::Report report = chemrag::aggregate_report(items, report_json.at("config"));
    chemrag::atomic_write_file(std::filesystem::path(run_dir) / "report.json",
                               report.to_json().dump(2) + "\n");
    std::cout << report.to_json().dump(2) << "\n";
    return 0;
}

int cmd_mol_validate(const std::string& smiles) {
    chemrag::chem::ParseWarnings warnings;
    bool valid = true;
    try {
        chemrag::chem::parse_smiles(smiles, &warnings);
    } catch (const chemrag::chem::SmilesParseError& e) {
        valid = false;
        std::cerr << e.what() << "\n";
    }
    if (warnings.stereo_discarded > 0)
        std::cerr << "warning: " << warnings.stereo_discarded << " stereo marker(s) discarded\n";
    std::cout << (valid ? "valid" : "invalid") << "\n";
    return 0;
}

int cmd_mol_canon(const std::string& smiles) {
    chemrag::chem::ParseWarnings warnings;
    chemrag::chem::MolGraph m = chemrag::chem::parse_smiles(smiles, &warnings);
    if (warnings.stereo_discarded > 0)
        std::cerr << "warning: " << warnings.stereo_discarded << " stereo marker(s) discarded\n";
    std::cout << chemrag::chem::canonical_smiles(m) << "\n";
    return 0;
}

int cmd_mol_sim(const std::string& kind, const std::string& a, const std::string& b) {
    chemrag::chem::MolGraph ma = chemrag::chem::parse_smiles(a);
    chemrag::chem::MolGraph mb = chemrag::chem::parse_smiles(b);
    double value = 0.0;
    if (kind == "morgan") {
        value = chemrag::chem::tanimoto(chemrag::chem::morgan_fingerprint(ma),
                                        chemrag::chem::morgan_fingerprint(mb));
    } else if (kind == "path") {
        value = chemrag::chem::tanimoto(chemrag::chem::path_fingerprint(ma),
                                        chemrag::chem::path_fingerprint(mb));
    } else if (kind == "keys") {
        const auto& keys = chemrag::chem::default_key_set();
        value = chemrag::chem::tanimoto(chemrag::chem::structural_keys(ma, keys),
                                        chemrag::chem::structural_keys(mb, keys));
    } else {
        throw chemrag::ValidationError("--kind must be morgan, path, or keys");
    }
    std::cout << json{{"kind", kind}, {"value", value}}.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chemistry RAG toolkit and benchmark harness"};
    app.require_subcommand(1);
    GlobalOptions options;
    app.add_option("--config", options.config_path, "gateway/profile config JSON");
    app.add_option("--cache-dir", options.cache_dir, "response cache directory");
    app.add_flag("--verbose", options.verbose, "chatty progress on stderr");

    // ingest
    std::string in_path, source_name, out_path;
    size_t max_tokens = 512;
    bool no_paragraph = false, append = false;
    auto* ingest = app.add_subcommand("ingest", "chunk raw documents into the snippet store");
    ingest->add_option("--in", in_path, "raw documents JSONL")->required();
    ingest->add_option("--source", source_name, "source kind")->required();
    ingest->add_option("--out", out_path, "snippet store JSONL path")->required();
    ingest->add_option("--max-tokens", max_tokens, "chunk budget in whitespace tokens");
    ingest->add_flag("--no-paragraph-boundary", no_paragraph, "split purely at token boundaries");
    ingest->add_flag("--append", append, "add to an existing store");

    // index build
    auto* index = app.add_subcommand("index", "index operations");
    index->require_subcommand(1);
    std::string corpus_path, index_kind, embedder_name, index_out;
    double k1 = 1.2, b = 0.75;
    auto* build = index->add_subcommand("build", "build a lexical or dense index");
    build->add_option("--corpus", corpus_path, "snippet store JSONL")->required();
    build->add_option("--kind", index_kind, "lexical | dense")->required();
    build->add_option("--embedder", embedder_name, "embedding profile for dense indexes");
    build->add_option("--out", index_out, "index directory")->required();
    build->add_option("--k1", k1, "BM25 k1");
    build->add_option("--b", b, "BM25 b");

    // retrieve
    std::vector<std::string> index_dirs;
    std::string query;
    size_t k = 5, depth = 100;
    unsigned rrf_c = 60;
    auto* retrieve = app.add_subcommand("retrieve", "query one index, or fuse several via RRF");
    retrieve->add_option("--index", index_dirs, "index directory (repeat to fuse)")->required();
    retrieve->add_option("--query", query, "query text")->required();
    retrieve->add_option("--k", k, "results to return");
    retrieve->add_option("--rrf-c", rrf_c, "RRF rank constant");
    retrieve->add_option("--depth", depth, "per-component depth before fusion");

    // run / sweep / proportions
    std::string run_config_path, run_out;
    auto* run = app.add_subcommand("run", "run the benchmark per a run config JSON");
    run->add_option("--config", run_config_path, "run config JSON")->required();
    run->add_option("--out", run_out, "output directory override");

    std::string sweep_config_path, sweep_ks = "1,5,10,15", sweep_out;
    auto* sweep = app.add_subcommand("sweep", "run the benchmark across several k values");
    sweep->add_option("--config", sweep_config_path, "run config JSON")->required();
    sweep->add_option("--ks", sweep_ks, "comma-separated k values");
    sweep->add_option("--out", sweep_out, "output directory override");

    std::string prop_run_dir;
    size_t top_n = 50;
    auto* proportions =
        app.add_subcommand("proportions", "per-task source distribution of retrieved snippets");
    proportions->add_option("--run", prop_run_dir, "finished run directory")->required();
    proportions->add_option("--top-n", top_n, "retrieval depth to analyze");

    // score
    std::string metric, pred, gold, score_items_dir;
    auto* score = app.add_subcommand("score", "score a pred/gold pair, or re-score a run");
    score->add_option("--metric", metric, "bleu | bleu_char | rouge_l | levenshtein | numeric | choice");
    score->add_option("--pred", pred, "prediction");
    score->add_option("--gold", gold, "reference");
    score->add_option("--items", score_items_dir, "run directory to re-score from stored responses");

    // mol
    auto* mol = app.add_subcommand("mol", "molecule utilities");
    mol->require_subcommand(1);
    std::string smiles_arg, canon_arg, sim_kind = "morgan", sim_a, sim_b;
    auto* validate = mol->add_subcommand("validate", "check whether a SMILES string parses");
    validate->add_option("smiles", smiles_arg, "SMILES string")->required();
    auto* canon = mol->add_subcommand("canon", "canonical SMILES");
    canon->add_option("smiles", canon_arg, "SMILES string")->required();
    auto* sim = mol->add_subcommand("sim", "fingerprint Tanimoto similarity");
    sim->add_option("--kind", sim_kind, "morgan | path | keys");
    sim->add_option("a", sim_a, "first SMILES")->required();
    sim->add_option("b", sim_b, "second SMILES")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11 prints usage; normalize its error codes to exit 1
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*ingest)
            return cmd_ingest(options, in_path, source_name, out_path, max_tokens, !no_paragraph,
                              append);
        if (*build)
            return cmd_index_build(options, corpus_path, index_kind, embedder_name, index_out, k1,
                                   b);
        if (*retrieve) return cmd_retrieve(options, index_dirs, query, k, rrf_c, depth);
        if (*run) return cmd_run(options, run_config_path, run_out);
        if (*sweep) return cmd_sweep(options, sweep_config_path, sweep_ks, sweep_out);
        if (*proportions) return cmd_proportions(options, prop_run_dir, top_n);
        if (*score) {
            if (!score_items_dir.empty()) return cmd_score_items(score_items_dir);
            if (metric.empty())
                throw chemrag::ValidationError("score needs --metric with --pred/--gold, or --items");
            return cmd_score_pair(metric, pred, gold);
        }
        if (*validate) return cmd_mol_validate(smiles_arg);
        if (*canon) return cmd_mol_canon(canon_arg);
        if (*sim) return cmd_mol_sim(sim_kind, sim_a, sim_b);
        return 1;
    } catch (const chemrag::chem::SmilesParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const chemrag::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const chemrag::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
