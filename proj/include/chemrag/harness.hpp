#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemrag/corpus.hpp"
#include "chemrag/fusion.hpp"
#include "chemrag/gateway.hpp"
#include "chemrag/question.hpp"
#include "chemrag/ranked_list.hpp"

namespace chemrag {

struct ScoreValue {
    std::string metric;
    double value = 0.0; // always [0, 1]; presentation scaling happens at report time
};

// Answer extraction by question kind; failures yield the "unparsed" sentinel.
std::string extract_answer(const std::string& response, const Question& q);

// Routes to the metric set of the question's kind. An unparsed answer scores
// 0 on every metric. Fingerprint similarities are 0 unless both sides parse.
std::vector<ScoreValue> score_item(const Question& q, const std::string& extracted);

// Metric used for dataset composites: accuracy for choice/numeric kinds,
// rouge_l for open text, exact match for molecule generation.
std::string primary_metric_for(QuestionKind kind);

struct RunConfig {
    std::string model = "echo";
    std::string retriever = "rrf";
    std::string corpus_id = "chemrag";
    size_t k = 5;
    std::string prompt_mode = "rag"; // "baseline" | "rag"
    size_t rounds = 0;               // 0 = auto: 3 for reasoning profiles, 1 otherwise
    size_t parallelism = 1;
    bool check_counts = true;
    std::map<std::string, std::filesystem::path> indexes; // retriever id -> index dir
    std::vector<std::pair<DatasetId, std::filesystem::path>> datasets;
    std::filesystem::path out_dir;
    FusionParams fusion;
    size_t fusion_depth = 100;

    void validate() const;
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ItemResult {
    std::string question_id;
    DatasetId dataset = DatasetId::mmlu_chem;
    std::string task;
    QuestionKind kind = QuestionKind::multi_choice;
    std::string query;                    // rag runs only
    std::vector<ScoredId> retrieved;      // <= k entries
    std::string prompt;
    std::vector<std::string> responses;   // one per round
    std::vector<std::string> extracted;   // one per round
    std::map<std::string, double> scores; // per-metric means over rounds
    std::string error;                    // set iff the item failed; scores empty then

    bool errored() const { return !error.empty(); }
    bool unparsed() const; // every round failed to parse
    nlohmann::json to_json() const;
    static ItemResult from_json(const nlohmann::json& j);
};

struct Report {
    std::string created_at;
    nlohmann::json config_echo;
    // task key "dataset/task" -> metric -> mean over that task's items
    std::map<std::string, std::map<std::string, double>> per_task;
    std::map<std::string, size_t> per_task_counts;
    std::map<std::string, double> per_dataset; // unweighted mean of task primaries
    double overall = 0.0;                      // unweighted mean over datasets
    size_t total_items = 0;
    size_t unparsed_items = 0;
    size_t errored_items = 0;
    bool degraded = false; // > 20% items errored

    nlohmann::json to_json() const;
};

// Aggregation shared by run_benchmark and post-hoc re-scoring: errored items
// count 0 on every metric their kind produces.
Report aggregate_report(const std::vector<ItemResult>& items,
                        const nlohmann::json& config_echo);

// Full protocol per item: build_query -> retrieve k -> render prompt ->
// chat (rounds times, scores averaged) -> extract -> score. Items persist to
// out_dir/items.jsonl, the aggregate to out_dir/report.json.
Report run_benchmark(const RunConfig& config, Gateway& gateway);

struct SweepRow {
    size_t k = 0;
    std::map<std::string, double> per_dataset;
    double overall = 0.0;
};

// One run per k with shared caches; sweep.csv lands in config.out_dir.
std::vector<SweepRow> k_sweep(RunConfig config, const std::vector<size_t>& ks, Gateway& gateway);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct ProportionRow {
    std::string task; // "dataset/task"
    std::map<SourceKind, double> fractions;
};

// Per-task source distribution over the top_n retrieved snippets of a
// finished rag run; retrieval re-executes at depth top_n when the stored
// depth is lower. Writes proportions.csv into the run directory.
std::vector<ProportionRow> source_proportions(const std::filesystem::path& run_dir,
                                              Gateway& gateway, size_t top_n = 50);
std::string proportions_csv(const std::vector<ProportionRow>& rows);

std::vector<ItemResult> load_items(const std::filesystem::path& run_dir);

}  // namespace chemrag
