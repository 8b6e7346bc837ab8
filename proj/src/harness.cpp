#include "chemrag/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "chemrag/fingerprints.hpp"
#include "chemrag/prompts.hpp"
#include "chemrag/retriever.hpp"
#include "chemrag/smiles.hpp"
#include "chemrag/text_metrics.hpp"
#include "chemrag/util.hpp"

namespace chemrag {

namespace {

using nlohmann::json;

constexpr const char* kUnparsed = "unparsed";
constexpr const char* kAnswerPhrase = "The answer is therefore";

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

size_t find_ci(const std::string& haystack, const std::string& needle, size_t from = 0) {
    std::string h = to_lower_ascii(haystack);
    std::string n = to_lower_ascii(needle);
    return h.find(n, from);
}

size_t rfind_ci(const std::string& haystack, const std::string& needle) {
    std::string h = to_lower_ascii(haystack);
    std::string n = to_lower_ascii(needle);
    return h.rfind(n);
}

// earliest standalone (word-bounded, case-insensitive) occurrence of any label
std::string first_standalone_label(const std::string& response,
                                   const std::vector<std::string>& labels) {
    std::string lower = to_lower_ascii(response);
    size_t best_pos = std::string::npos;
    std::string best_label;
    for (const std::string& label : labels) {
        std::string target = to_lower_ascii(label);
        size_t from = 0;
        while (true) {
            size_t pos = lower.find(target, from);
            if (pos == std::string::npos) break;
            bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
            size_t end = pos + target.size();
            bool right_ok = end == lower.size() || !is_word_char(lower[end]);
            if (left_ok && right_ok) {
                if (pos < best_pos) {
                    best_pos = pos;
                    best_label = label;
                }
                break;
            }
            from = pos + 1;
        }
    }
    return best_pos == std::string::npos ? "" : best_label;
}

std::string extract_choice(const std::string& response, const Question& q) {
    std::string label = first_standalone_label(response, q.choice_labels());
    if (!label.empty()) return label;
    // fall back to matching the option texts themselves
    std::string trimmed = to_lower_ascii(trim(response));
    for (const auto& [l, text] : q.choices)
        if (to_lower_ascii(trim(text)) == trimmed) return l;
    size_t best_pos = std::string::npos;
    std::string best_label;
    for (const auto& [l, text] : q.choices) {
        std::string t = trim(text);
        if (t.empty()) continue;
        size_t pos = find_ci(response, t);
        if (pos != std::string::npos && pos < best_pos) {
            best_pos = pos;
            best_label = l;
        }
    }
    return best_label.empty() ? kUnparsed : best_label;
}

const std::regex& number_pattern() {
    static const std::regex pattern(
        R"([+-]?(?:\d[\d,]*(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)");
    return pattern;
}

// last number in the text, commas and currency stripped
std::string last_number(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text)
        if (c != '$') cleaned.push_back(c);
    std::string found;
    auto begin = std::sregex_iterator(cleaned.begin(), cleaned.end(), number_pattern());
    for (auto it = begin; it != std::sregex_iterator(); ++it) found = it->str();
    if (found.empty()) return "";
    found.erase(std::remove(found.begin(), found.end(), ','), found.end());
    try {
        size_t pos = 0;
        std::stod(found, &pos);
        if (pos != found.size()) return "";
    } catch (const std::exception&) {
        return "";
    }
    return found;
}

std::string extract_numeric(const std::string& response) {
    size_t phrase = rfind_ci(response, kAnswerPhrase);
    if (phrase != std::string::npos) {
        size_t end = response.find('\n', phrase);
        std::string sentence = response.substr(
            phrase, end == std::string::npos ? std::string::npos : end - phrase);
        std::string number = last_number(sentence);
        if (!number.empty()) return number;
    }
    std::string number = last_number(response);
    return number.empty() ? kUnparsed : number;
}

std::string strip_punct(const std::string& token) {
    size_t begin = 0;
    size_t end = token.size();
    auto droppable = [](char c) {
        return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
               c == '"' || c == '\'' || c == '`';
    };
    while (begin < end && droppable(token[begin])) ++begin;
    while (end > begin && droppable(token[end - 1])) --end;
    return token.substr(begin, end - begin);
}

std::string extract_molecule(const std::string& response) {
    size_t open = response.find("[ANSWER]");
    if (open != std::string::npos) {
        size_t body = open + std::string("[ANSWER]").size();
        size_t close = response.find("[/ANSWER]", body);
        if (close != std::string::npos) {
            std::string inner = trim(response.substr(body, close - body));
            if (!inner.empty()) return inner;
        }
    }
    // longest whitespace-delimited token that parses as SMILES
    std::string best;
    for (const std::string& raw : split_whitespace(response)) {
        for (const std::string& candidate : {raw, strip_punct(raw)}) {
            if (candidate.size() > best.size() && chem::validity(candidate)) best = candidate;
        }
    }
    return best.empty() ? kUnparsed : best;
}

double safe_numeric_accuracy(const std::string& extracted, const std::string& gold) {
    if (extracted == kUnparsed) return 0.0;
    try {
        double pred = std::stod(extracted);
        double g = std::stod(gold);
        return metrics::numeric_match(pred, g) ? 1.0 : 0.0;
    } catch (const std::exception&) {
        return 0.0;
    }
}

std::vector<ScoreValue> molecule_scores(const std::string& extracted, const std::string& gold) {
    std::vector<ScoreValue> out;
    if (extracted == kUnparsed) {
        for (const char* metric : {"em", "validity", "structural_key_fts", "path_fts",
                                   "morgan_fts", "bleu_char", "bleu_token", "levenshtein_sim"})
            out.push_back({metric, 0.0});
        return out;
    }
    bool pred_valid = chem::validity(extracted);
    bool gold_valid = chem::validity(gold);
    out.push_back({"em", chem::exact_match(extracted, gold) ? 1.0 : 0.0});
    out.push_back({"validity", pred_valid ? 1.0 : 0.0});
    double structural = 0.0, path = 0.0, morgan = 0.0;
    if (pred_valid && gold_valid) {
        chem::MolGraph pred = chem::parse_smiles(extracted);
        chem::MolGraph g = chem::parse_smiles(gold);
        structural = chem::tanimoto(chem::structural_keys(pred, chem::default_key_set()),
                                    chem::structural_keys(g, chem::default_key_set()));
        path = chem::tanimoto(chem::path_fingerprint(pred), chem::path_fingerprint(g));
        morgan = chem::tanimoto(chem::morgan_fingerprint(pred), chem::morgan_fingerprint(g));
    }
    out.push_back({"structural_key_fts", structural});
    out.push_back({"path_fts", path});
    out.push_back({"morgan_fts", morgan});
    out.push_back({"bleu_char", metrics::bleu(metrics::char_tokens(extracted),
                                              metrics::char_tokens(gold))});
    out.push_back({"bleu_token", metrics::bleu(metrics::prose_tokens(extracted),
                                               metrics::prose_tokens(gold))});
    out.push_back({"levenshtein_sim", metrics::levenshtein_sim(extracted, gold)});
    return out;
}

}  // namespace

std::string extract_answer(const std::string& response, const Question& q) {
    switch (q.kind) {
        case QuestionKind::multi_choice: return extract_choice(response, q);
        case QuestionKind::numeric:
        case QuestionKind::property_numeric: return extract_numeric(response);
        case QuestionKind::open_molecule: return extract_molecule(response);
        case QuestionKind::open_text: return trim(response);
    }
    return kUnparsed;
}

std::vector<ScoreValue> score_item(const Question& q, const std::string& extracted) {
    switch (q.kind) {
        case QuestionKind::multi_choice:
            return {{"accuracy", metrics::choice_accuracy(extracted, q.gold) ? 1.0 : 0.0}};
        case QuestionKind::numeric:
        case QuestionKind::property_numeric:
            return {{"accuracy", safe_numeric_accuracy(extracted, q.gold)}};
        case QuestionKind::open_text: {
            if (extracted == kUnparsed)
                return {{"bleu", 0.0}, {"rouge_l", 0.0}};
            auto cand = metrics::prose_tokens(extracted);
            auto ref = metrics::prose_tokens(q.gold);
            return {{"bleu", metrics::bleu(cand, ref)}, {"rouge_l", metrics::rouge_l(cand, ref)}};
        }
        case QuestionKind::open_molecule: return molecule_scores(extracted, q.gold);
    }
    return {};
}

std::string primary_metric_for(QuestionKind kind) {
    switch (kind) {
        case QuestionKind::multi_choice:
        case QuestionKind::numeric:
        case QuestionKind::property_numeric: return "accuracy";
        case QuestionKind::open_text: return "rouge_l";
        case QuestionKind::open_molecule: return "em";
    }
    return "accuracy";
}

void RunConfig::validate() const {
    if (prompt_mode != "baseline" && prompt_mode != "rag")
        throw ValidationError("prompt_mode must be 'baseline' or 'rag'");
    if (prompt_mode == "rag" && k < 1) throw ValidationError("rag mode needs k >= 1");
    if (datasets.empty()) throw ValidationError("run config names no datasets");
    if (out_dir.empty()) throw ValidationError("run config needs an output directory");
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    cfg.model = j.value("model", cfg.model);
    cfg.retriever = j.value("retriever", cfg.retriever);
    cfg.corpus_id = j.value("corpus", cfg.corpus_id);
    cfg.k = j.value("k", cfg.k);
    cfg.prompt_mode = j.value("prompt_mode", cfg.prompt_mode);
    cfg.rounds = j.value("rounds", cfg.rounds);
    cfg.parallelism = j.value("parallelism", cfg.parallelism);
    cfg.check_counts = j.value("check_counts", cfg.check_counts);
    if (j.contains("indexes"))
        for (auto it = j["indexes"].begin(); it != j["indexes"].end(); ++it)
            cfg.indexes[it.key()] = it.value().get<std::string>();
    if (j.contains("datasets"))
        for (const auto& row : j["datasets"])
            cfg.datasets.emplace_back(dataset_id_from_string(row.at("id").get<std::string>()),
                                      row.at("path").get<std::string>());
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    cfg.fusion.c = j.value("rrf_c", cfg.fusion.c);
    cfg.fusion_depth = j.value("fusion_depth", cfg.fusion_depth);
    return cfg;
}

json RunConfig::to_json() const {
    json j;
    j["model"] = model;
    j["retriever"] = retriever;
    j["corpus"] = corpus_id;
    j["k"] = k;
    j["prompt_mode"] = prompt_mode;
    j["rounds"] = rounds;
    j["parallelism"] = parallelism;
    j["check_counts"] = check_counts;
    json indexes_json = json::object();
    for (const auto& [id, dir] : indexes) indexes_json[id] = dir.string();
    j["indexes"] = indexes_json;
    json datasets_json = json::array();
    for (const auto& [id, path] : datasets)
        datasets_json.push_back({{"id", to_string(id)}, {"path", path.string()}});
    j["datasets"] = datasets_json;
    j["out"] = out_dir.string();
    j["rrf_c"] = fusion.c;
    j["fusion_depth"] = fusion_depth;
    return j;
}

bool ItemResult::unparsed() const {
    if (errored() || extracted.empty()) return false;
    return std::all_of(extracted.begin(), extracted.end(),
                       [](const std::string& e) { return e == kUnparsed; });
}

json ItemResult::to_json() const {
    json j;
    j["question_id"] = question_id;
    j["dataset"] = to_string(dataset);
    j["task"] = task;
    j["kind"] = to_string(kind);
    if (!query.empty()) j["query"] = query;
    json retrieved_json = json::array();
    for (const ScoredId& r : retrieved)
        retrieved_json.push_back({{"id", r.id}, {"score", r.score}});
    j["retrieved"] = retrieved_json;
    j["prompt"] = prompt;
    if (errored()) {
        j["error"] = error;
    } else {
        j["responses"] = responses;
        j["extracted"] = extracted;
        j["scores"] = scores;
    }
    return j;
}

ItemResult ItemResult::from_json(const json& j) {
    ItemResult item;
    item.question_id = j.at("question_id").get<std::string>();
    item.dataset = dataset_id_from_string(j.at("dataset").get<std::string>());
    item.task = j.at("task").get<std::string>();
    item.kind = question_kind_from_string(j.at("kind").get<std::string>());
    item.query = j.value("query", "");
    if (j.contains("retrieved"))
        for (const auto& row : j["retrieved"])
            item.retrieved.push_back(
                {row.at("id").get<std::string>(), row.at("score").get<double>()});
    item.prompt = j.value("prompt", "");
    if (j.contains("error")) {
        item.error = j["error"].get<std::string>();
    } else {
        item.responses = j.value("responses", std::vector<std::string>{});
        item.extracted = j.value("extracted", std::vector<std::string>{});
        if (j.contains("scores"))
            for (auto it = j["scores"].begin(); it != j["scores"].end(); ++it)
                item.scores[it.key()] = it.value().get<double>();
    }
    return item;
}

json Report::to_json() const {
    json j;
    j["created_at"] = created_at;
    j["config"] = config_echo;
    json per_task_json = json::object();
    for (const auto& [task, metric_means] : per_task) {
        json row = json::object();
        for (const auto& [metric, mean] : metric_means) row[metric] = mean;
        row["n"] = per_task_counts.at(task);
        per_task_json[task] = row;
    }
    j["per_task"] = per_task_json;
    json per_dataset_json = json::object();
    for (const auto& [dataset, composite] : per_dataset) per_dataset_json[dataset] = composite;
    j["per_dataset"] = per_dataset_json;
    j["overall"] = overall;
    j["total_items"] = total_items;
    j["unparsed_items"] = unparsed_items;
    j["errored_items"] = errored_items;
    j["degraded"] = degraded;
    return j;
}

Report aggregate_report(const std::vector<ItemResult>& items, const json& config_echo) {
    Report report;
    report.created_at = now_iso8601();
    report.config_echo = config_echo;
    report.total_items = items.size();

    // items keyed and walked in sorted question-id order
    std::map<std::string, const ItemResult*> by_id;
    for (const ItemResult& item : items) {
        if (!by_id.emplace(item.question_id, &item).second)
            throw ValidationError("duplicate question id in results: " + item.question_id);
    }

    std::map<std::string, std::map<std::string, std::pair<double, size_t>>> task_acc;
    std::map<std::string, QuestionKind> task_kind;
    std::map<std::string, std::set<std::string>> dataset_tasks;
    for (const auto& [id, item] : by_id) {
        std::string task_key = to_string(item->dataset) + "/" + item->task;
        task_kind[task_key] = item->kind;
        dataset_tasks[to_string(item->dataset)].insert(task_key);
        if (item->errored()) report.errored_items++;
        if (item->unparsed()) report.unparsed_items++;

        // errored items contribute 0 on every metric of their kind
        std::map<std::string, double> effective;
        if (item->errored()) {
            Question probe;
            probe.kind = item->kind;
            for (const ScoreValue& sv : score_item(probe, kUnparsed))
                effective[sv.metric] = 0.0;
        } else {
            effective = item->scores;
        }
        for (const auto& [metric, value] : effective) {
            auto& [sum, count] = task_acc[task_key][metric];
            sum += value;
            count++;
        }
    }

    for (const auto& [task_key, metric_acc] : task_acc) {
        size_t n = 0;
        for (const auto& [metric, acc] : metric_acc) {
            report.per_task[task_key][metric] = acc.first / static_cast<double>(acc.second);
            n = acc.second;
        }
        report.per_task_counts[task_key] = n;
    }

    for (const auto& [dataset, tasks] : dataset_tasks) {
        double sum = 0.0;
        for (const std::string& task_key : tasks)
            sum += report.per_task[task_key][primary_metric_for(task_kind[task_key])];
        report.per_dataset[dataset] = sum / static_cast<double>(tasks.size());
    }

    if (!report.per_dataset.empty()) {
        double sum = 0.0;
        for (const auto& [dataset, composite] : report.per_dataset) sum += composite;
        report.overall = sum / static_cast<double>(report.per_dataset.size());
    }

    report.degraded =
        report.total_items > 0 &&
        static_cast<double>(report.errored_items) > 0.2 * static_cast<double>(report.total_items);
    return report;
}

Report run_benchmark(const RunConfig& config, Gateway& gateway) {
    config.validate();
    const ModelProfile& profile = gateway.profile(config.model);
    if (profile.kind != ModelKind::chat)
        throw ConfigError("model '" + config.model + "' is not a chat profile");
    size_t rounds = config.rounds ? config.rounds : (profile.reasoning ? 3 : 1);
    bool rag = config.prompt_mode == "rag";

    std::vector<Question> questions;
    for (const auto& [dataset, path] : config.datasets) {
        LoadOptions options;
        options.check_counts = config.check_counts;
        for (Question& q : load_dataset(path, dataset, options)) questions.push_back(std::move(q));
    }

    std::optional<Retriever> retriever;
    if (rag) {
        RetrieverSetup setup;
        setup.index_dirs = config.indexes;
        setup.fusion = config.fusion;
        setup.fusion_depth = config.fusion_depth;
        retriever.emplace(std::move(setup), gateway);
        retriever->preload(config.retriever);
    }

    std::vector<ItemResult> items(questions.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = cursor.fetch_add(1);
            if (i >= questions.size()) return;
            const Question& q = questions[i];
            ItemResult& item = items[i];
            item.question_id = q.id;
            item.dataset = q.dataset;
            item.task = q.task;
            item.kind = q.kind;
            try {
                std::vector<RetrievedSnippet> passages;
                if (rag) {
                    item.query = build_query(q);
                    passages = retriever->retrieve(config.retriever, item.query, config.k);
                    for (const RetrievedSnippet& p : passages)
                        item.retrieved.push_back({p.snippet.id, p.score});
                }
                auto messages = render_prompt(prompt_kind_for(q.kind, rag), q, passages);
                item.prompt = messages.back().content;

                std::map<std::string, std::pair<double, size_t>> acc;
                for (size_t round = 0; round < rounds; ++round) {
                    std::string response =
                        gateway.chat_complete(profile, messages, static_cast<int>(round));
                    item.responses.push_back(response);
                    std::string extracted = extract_answer(response, q);
                    item.extracted.push_back(extracted);
                    for (const ScoreValue& sv : score_item(q, extracted)) {
                        acc[sv.metric].first += sv.value;
                        acc[sv.metric].second++;
                    }
                }
                for (const auto& [metric, pair] : acc)
                    item.scores[metric] = pair.first / static_cast<double>(pair.second);
            } catch (const std::exception& e) {
                item.responses.clear();
                item.extracted.clear();
                item.scores.clear();
                item.error = e.what();
            }
        }
    };

    size_t workers = std::min(config.parallelism, std::max<size_t>(1, questions.size()));
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    std::sort(items.begin(), items.end(), [](const ItemResult& a, const ItemResult& b) {
        return a.question_id < b.question_id;
    });

    std::filesystem::create_directories(config.out_dir);
    std::ostringstream lines;
    for (const ItemResult& item : items) lines << item.to_json().dump() << '\n';
    atomic_write_file(config.out_dir / "items.jsonl", lines.str());

    Report report = aggregate_report(items, config.to_json());
    atomic_write_file(config.out_dir / "report.json", report.to_json().dump(2) + "\n");
    return report;
}

std::vector<SweepRow> k_sweep(RunConfig config, const std::vector<size_t>& ks, Gateway& gateway) {
    if (ks.empty()) throw ValidationError("sweep needs at least one k");
    std::filesystem::path base = config.out_dir;
    std::vector<SweepRow> rows;
    for (size_t k : ks) {
        RunConfig run = config;
        run.k = k;
        run.out_dir = base / ("k" + std::to_string(k));
        Report report = run_benchmark(run, gateway);
        SweepRow row;
        row.k = k;
        row.per_dataset = report.per_dataset;
        row.overall = report.overall;
        rows.push_back(std::move(row));
    }
    atomic_write_file(base / "sweep.csv", sweep_csv(rows));
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "k";
    if (!rows.empty())
        for (const auto& [dataset, value] : rows.front().per_dataset) out << ',' << dataset;
    out << ",overall\n";
    char buf[32];
    for (const SweepRow& row : rows) {
        out << row.k;
        for (const auto& [dataset, value] : row.per_dataset) {
            std::snprintf(buf, sizeof(buf), "%.6f", value);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.6f", row.overall);
        out << ',' << buf << '\n';
    }
    return out.str();
}

std::vector<ItemResult> load_items(const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "items.jsonl");
    if (!in) throw NotFoundError("no items.jsonl in " + run_dir.string());
    std::vector<ItemResult> items;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        items.push_back(ItemResult::from_json(json::parse(line)));
    }
    return items;
}

std::vector<ProportionRow> source_proportions(const std::filesystem::path& run_dir,
                                              Gateway& gateway, size_t top_n) {
    if (top_n < 1) throw ValidationError("top_n must be >= 1");
    json report = json::parse(read_file(run_dir / "report.json"));
    json config_echo = report.at("config");
    if (config_echo.value("prompt_mode", "") != "rag")
        throw ValidationError("source proportions need a rag run (baseline runs retrieve nothing)");
    RunConfig config = RunConfig::from_json(config_echo);

    RetrieverSetup setup;
    setup.index_dirs = config.indexes;
    setup.fusion = config.fusion;
    setup.fusion_depth = std::max(config.fusion_depth, top_n);
    Retriever retriever(std::move(setup), gateway);
    retriever.preload(config.retriever);

    std::vector<ItemResult> items = load_items(run_dir);
    bool need_requery = config.k < top_n;

    std::map<std::string, std::map<SourceKind, size_t>> counts;
    std::map<std::string, size_t> totals;
    for (const ItemResult& item : items) {
        if (item.errored()) continue;
        std::string task_key = to_string(item.dataset) + "/" + item.task;
        std::vector<ScoredId> top;
        if (need_requery) {
            RankedList list = retriever.ranked(config.retriever, item.query, top_n);
            top = list.items;
        } else {
            top = item.retrieved;
            if (top.size() > top_n) top.resize(top_n);
        }
        for (const ScoredId& entry : top) {
            counts[task_key][retriever.snippet_by_id(entry.id).source]++;
            totals[task_key]++;
        }
    }

    std::vector<ProportionRow> rows;
    for (const auto& [task_key, source_counts] : counts) {
        ProportionRow row;
        row.task = task_key;
        double total = static_cast<double>(totals[task_key]);
        for (SourceKind kind : kAllSources) {
            size_t count = 0;
            if (auto it = source_counts.find(kind); it != source_counts.end()) count = it->second;
            row.fractions[kind] = total > 0 ? static_cast<double>(count) / total : 0.0;
        }
        rows.push_back(std::move(row));
    }
    atomic_write_file(run_dir / "proportions.csv", proportions_csv(rows));
    return rows;
}

std::string proportions_csv(const std::vector<ProportionRow>& rows) {
    std::ostringstream out;
    out << "task,source,fraction\n";
    char buf[32];
    for (const ProportionRow& row : rows) {
        for (SourceKind kind : kAllSources) {
            std::snprintf(buf, sizeof(buf), "%.9f", row.fractions.at(kind));
            out << row.task << ',' << to_string(kind) << ',' << buf << '\n';
        }
    }
    return out.str();
}

}  // namespace chemrag
