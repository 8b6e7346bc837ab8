#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include "chemrag/harness.hpp"
#include "chemrag/lexical_index.hpp"
#include "chemrag/retriever.hpp"
#include "chemrag/util.hpp"

using namespace chemrag;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("chemrag_harness_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::filesystem::path data_dir() { return CHEMRAG_TEST_DATA_DIR; }

Snippet make_snippet(SourceKind source, const std::string& text) {
    Snippet s;
    s.source = source;
    s.text = text;
    s.token_count = count_whitespace_tokens(text);
    s.id = snippet_id(source, text);
    return s;
}

std::vector<Snippet> fixture_corpus(size_t n, SourceKind source = SourceKind::openstax) {
    std::vector<Snippet> out;
    static const char* topics[] = {"acid", "base", "benzene", "ethanol", "combustion",
                                   "pressure", "electronegativity", "alcohol"};
    for (size_t i = 0; i < n; ++i)
        out.push_back(make_snippet(source, std::string("passage about ") +
                                               topics[i % 8] + " number " + std::to_string(i)));
    return out;
}

RunConfig fixture_config(const std::filesystem::path& root, const std::string& mode) {
    RunConfig config;
    config.model = "echo";
    config.retriever = "bm25";
    config.k = 5;
    config.prompt_mode = mode;
    config.check_counts = false;
    config.out_dir = root / ("run_" + mode);
    config.datasets = {{DatasetId::mmlu_chem, data_dir() / "questions_mmlu.jsonl"},
                       {DatasetId::scibench_chem, data_dir() / "questions_scibench.jsonl"},
                       {DatasetId::chembench4k, data_dir() / "questions_chembench.jsonl"},
                       {DatasetId::mol_instructions, data_dir() / "questions_molinst.jsonl"}};
    if (mode == "rag") config.indexes["bm25"] = root / "ix_bm25";
    return config;
}

void build_bm25(const std::filesystem::path& root, const std::vector<Snippet>& corpus) {
    LexicalIndex::build(corpus).save(root / "ix_bm25");
}

std::string strip_timestamps(std::string text) {
    static const std::regex stamp("\"created_at\": \"[^\"]*\"");
    return std::regex_replace(text, stamp, "\"created_at\": \"X\"");
}

Question question_of(QuestionKind kind, std::string gold,
                     std::vector<std::pair<std::string, std::string>> choices = {}) {
    Question q;
    q.id = "t";
    q.kind = kind;
    q.text = "irrelevant";
    q.gold = std::move(gold);
    q.choices = std::move(choices);
    return q;
}

}  // namespace

TEST_SUITE("answer extraction") {

TEST_CASE("multi-choice label extraction") {
    Question q = question_of(QuestionKind::multi_choice, "B",
                             {{"A", "Oxygen"}, {"B", "Fluorine"}, {"C", "Chlorine"}});
    CHECK(extract_answer("I think B is correct", q) == "B");
    CHECK(extract_answer("B", q) == "B");
    CHECK(extract_answer("(b)", q) == "B");
    CHECK(extract_answer("A or C? A.", q) == "A");
    CHECK(extract_answer("the halogen fluorine", q) == "B"); // option text match
    CHECK(extract_answer("no option mentioned", q) == "unparsed");
    CHECK(extract_answer("cab", q) == "unparsed"); // embedded letters are not standalone
}

TEST_CASE("numeric extraction follows the conclusion sentence") {
    Question q = question_of(QuestionKind::numeric, "42");
    CHECK(extract_answer("The answer is therefore 42.0", q) == "42.0");
    CHECK(extract_answer("First 7, then 9.\nThe answer is therefore 13 units", q) == "13");
    CHECK(extract_answer("roughly 12 then improved to 15", q) == "15");
    CHECK(extract_answer("The answer is therefore 6.02e23 molecules", q) == "6.02e23");
    CHECK(extract_answer("costs $1,234.50 total", q) == "1234.50");
    CHECK(extract_answer("no digits at all", q) == "unparsed");
    CHECK(extract_answer("The answer is therefore -3.5", q) == "-3.5");
}

TEST_CASE("molecule extraction prefers the answer markers") {
    Question q = question_of(QuestionKind::open_molecule, "CCO");
    CHECK(extract_answer("[ANSWER]CCO[/ANSWER]", q) == "CCO");
    CHECK(extract_answer("text before [ANSWER] CC(=O)O [/ANSWER] after", q) == "CC(=O)O");
    CHECK(extract_answer("the molecule CCO should work", q) == "CCO");
    CHECK(extract_answer("maybe CCO.", q) == "CCO"); // punctuation stripped
    CHECK(extract_answer("nothing valid here!", q) == "unparsed");
}

TEST_CASE("open text extraction is the trimmed response") {
    Question q = question_of(QuestionKind::open_text, "whatever");
    CHECK(extract_answer("  some description  ", q) == "some description");
}

}

TEST_SUITE("scoring router") {

TEST_CASE("multi-choice routes to accuracy") {
    Question q = question_of(QuestionKind::multi_choice, "B", {{"A", "x"}, {"B", "y"}});
    auto scores = score_item(q, "B");
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].metric == "accuracy");
    CHECK(scores[0].value == 1.0);
    CHECK(score_item(q, "A")[0].value == 0.0);
    CHECK(score_item(q, "unparsed")[0].value == 0.0);
}

TEST_CASE("numeric tolerance is five percent") {
    Question q = question_of(QuestionKind::numeric, "100");
    CHECK(score_item(q, "104")[0].value == 1.0);
    CHECK(score_item(q, "105.1")[0].value == 0.0);
    CHECK(score_item(q, "unparsed")[0].value == 0.0);
    CHECK(score_item(q, "not-a-number")[0].value == 0.0);
}

TEST_CASE("molecule metrics: equal prediction scores one everywhere") {
    Question q = question_of(QuestionKind::open_molecule, "CCO");
    auto scores = score_item(q, "OCC");
    std::map<std::string, double> by_name;
    for (const auto& sv : scores) by_name[sv.metric] = sv.value;
    CHECK(by_name.at("em") == 1.0);
    CHECK(by_name.at("validity") == 1.0);
    CHECK(by_name.at("structural_key_fts") == 1.0);
    CHECK(by_name.at("path_fts") == 1.0);
    CHECK(by_name.at("morgan_fts") == 1.0);
    CHECK(by_name.at("levenshtein_sim") < 1.0); // raw strings differ
}

TEST_CASE("invalid molecule prediction zeroes the fingerprint metrics") {
    Question q = question_of(QuestionKind::open_molecule, "CCO");
    auto scores = score_item(q, "C1CC");
    std::map<std::string, double> by_name;
    for (const auto& sv : scores) by_name[sv.metric] = sv.value;
    CHECK(by_name.at("em") == 0.0);
    CHECK(by_name.at("validity") == 0.0);
    CHECK(by_name.at("structural_key_fts") == 0.0);
    CHECK(by_name.at("path_fts") == 0.0);
    CHECK(by_name.at("morgan_fts") == 0.0);
    CHECK(by_name.at("bleu_char") > 0.0); // text overlap still scored
}

TEST_CASE("open text routes to bleu and rouge") {
    Question q = question_of(QuestionKind::open_text, "the cat sat");
    auto scores = score_item(q, "the cat sat");
    std::map<std::string, double> by_name;
    for (const auto& sv : scores) by_name[sv.metric] = sv.value;
    CHECK(by_name.at("bleu") == doctest::Approx(1.0));
    CHECK(by_name.at("rouge_l") == doctest::Approx(1.0));
}

TEST_CASE("every emitted score stays in [0,1]") {
    Question q = question_of(QuestionKind::open_molecule, "CC(=O)Oc1ccccc1C(=O)O");
    for (const char* pred : {"CCO", "C1CC", "unparsed", "c1ccccc1"}) {
        for (const auto& sv : score_item(q, pred)) {
            CHECK(sv.value >= 0.0);
            CHECK(sv.value <= 1.0);
        }
    }
}

}

TEST_SUITE("benchmark harness") {

TEST_CASE("dataset loader validates schema, counts, and invariants") {
    LoadOptions no_check;
    no_check.check_counts = false;
    auto questions = load_dataset(data_dir() / "questions_mmlu.jsonl", DatasetId::mmlu_chem,
                                  no_check);
    REQUIRE(questions.size() == 2);
    CHECK(questions[0].kind == QuestionKind::multi_choice);
    CHECK(questions[0].choices.size() == 4);
    CHECK(questions[0].gold == "B");

    // count check trips on partial fixtures
    CHECK_THROWS_AS(load_dataset(data_dir() / "questions_mmlu.jsonl", DatasetId::mmlu_chem, {}),
                    ValidationError);

    // schema violations carry the line number
    TempDir tmp;
    auto bad = tmp.path / "bad.jsonl";
    {
        std::ofstream out(bad);
        out << R"({"id":"x","task":"t","kind":"multi_choice","text":"q","gold":"Z","choices":{"A":"a"}})"
            << "\n";
    }
    try {
        load_dataset(bad, DatasetId::mmlu_chem, no_check);
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
}

TEST_CASE("baseline run on the fixture is deterministic and self-consistent") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    RunConfig config = fixture_config(tmp.path, "baseline");
    Report report = run_benchmark(config, gateway);

    CHECK(report.total_items == 10);
    CHECK(report.errored_items == 0);
    CHECK_FALSE(report.degraded);
    CHECK(report.per_dataset.size() == 4);

    // report algebra: recompute overall from persisted items
    auto items = load_items(config.out_dir);
    Report recomputed = aggregate_report(items, report.config_echo);
    CHECK(recomputed.overall == doctest::Approx(report.overall).epsilon(1e-12));
    for (const auto& [dataset, composite] : report.per_dataset)
        CHECK(recomputed.per_dataset.at(dataset) == doctest::Approx(composite).epsilon(1e-12));

    // rerun is byte-identical modulo the timestamp
    std::string items_a = read_file(config.out_dir / "items.jsonl");
    std::string report_a = read_file(config.out_dir / "report.json");
    run_benchmark(config, gateway);
    CHECK(read_file(config.out_dir / "items.jsonl") == items_a);
    CHECK(strip_timestamps(read_file(config.out_dir / "report.json")) ==
          strip_timestamps(report_a));
}

TEST_CASE("rag run retrieves at most k snippets per item and differs only in the reference") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    build_bm25(tmp.path, fixture_corpus(40));
    RunConfig config = fixture_config(tmp.path, "rag");
    Report report = run_benchmark(config, gateway);
    CHECK(report.total_items == 10);

    auto items = load_items(config.out_dir);
    for (const auto& item : items) {
        CHECK(item.retrieved.size() <= config.k);
        CHECK_FALSE(item.prompt.empty());
        if (!item.query.empty() && item.kind == QuestionKind::multi_choice) {
            // question-only invariant: no choice text in the query
            CHECK(item.query.find("Bromobenzene") == std::string::npos);
            CHECK(item.query.find("Fluorine") == std::string::npos);
        }
    }
}

TEST_CASE("parallel execution matches the serial run byte for byte") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    build_bm25(tmp.path, fixture_corpus(40));
    RunConfig serial = fixture_config(tmp.path, "rag");
    serial.out_dir = tmp.path / "serial";
    run_benchmark(serial, gateway);
    RunConfig parallel = fixture_config(tmp.path, "rag");
    parallel.out_dir = tmp.path / "parallel";
    parallel.parallelism = 4;
    run_benchmark(parallel, gateway);
    CHECK(read_file(serial.out_dir / "items.jsonl") ==
          read_file(parallel.out_dir / "items.jsonl"));
}

TEST_CASE("rounds default to three for reasoning profiles and average the scores") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    // stub reasoning profile served by the echo path
    ModelProfile stub;
    stub.name = "echo-reasoner";
    stub.kind = ModelKind::chat;
    stub.reasoning = true;
    stub.temperature = 0.6;
    stub.max_tokens = 10000;
    stub.stub = true;
    gateway.register_profile(stub);

    RunConfig config = fixture_config(tmp.path, "baseline");
    config.model = "echo-reasoner";
    config.out_dir = tmp.path / "rounds";
    Report report = run_benchmark(config, gateway);
    auto items = load_items(config.out_dir);
    REQUIRE_FALSE(items.empty());
    for (const auto& item : items) {
        CHECK(item.responses.size() == 3);
        CHECK(item.extracted.size() == 3);
    }
    CHECK(report.total_items == 10);
}

TEST_CASE("k sweep emits one row per k and a csv") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    build_bm25(tmp.path, fixture_corpus(40));
    RunConfig config = fixture_config(tmp.path, "rag");
    config.out_dir = tmp.path / "sweep";
    auto rows = k_sweep(config, {1, 5}, gateway);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].k == 1);
    CHECK(rows[1].k == 5);
    std::string csv = read_file(tmp.path / "sweep" / "sweep.csv");
    CHECK(csv.find("k,") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3); // header + 2 rows
}

TEST_CASE("source proportions: single-source corpus gives a 100 percent split") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    build_bm25(tmp.path, fixture_corpus(40, SourceKind::openstax));
    RunConfig config = fixture_config(tmp.path, "rag");
    run_benchmark(config, gateway);
    auto rows = source_proportions(config.out_dir, gateway, 10);
    REQUIRE_FALSE(rows.empty());
    for (const auto& row : rows) {
        double sum = 0;
        for (const auto& [source, fraction] : row.fractions) sum += fraction;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(row.fractions.at(SourceKind::openstax) == doctest::Approx(1.0));
    }
}

TEST_CASE("source proportions match a recount oracle on a two-source corpus") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    auto corpus = fixture_corpus(25, SourceKind::openstax);
    auto wiki = fixture_corpus(25, SourceKind::wikipedia);
    corpus.insert(corpus.end(), wiki.begin(), wiki.end());
    build_bm25(tmp.path, corpus);
    RunConfig config = fixture_config(tmp.path, "rag");
    run_benchmark(config, gateway);

    size_t top_n = 20; // larger than stored k, forcing re-retrieval
    auto rows = source_proportions(config.out_dir, gateway, top_n);

    // oracle: recount from a fresh retrieval pass over the persisted queries
    RetrieverSetup setup;
    setup.index_dirs = config.indexes;
    Retriever retriever(setup, gateway);
    auto items = load_items(config.out_dir);
    std::map<std::string, std::map<SourceKind, size_t>> counts;
    std::map<std::string, size_t> totals;
    for (const auto& item : items) {
        std::string task_key = to_string(item.dataset) + "/" + item.task;
        for (const auto& hit : retriever.retrieve("bm25", item.query, top_n)) {
            counts[task_key][hit.snippet.source]++;
            totals[task_key]++;
        }
    }
    for (const auto& row : rows) {
        double sum = 0;
        for (const auto& [source, fraction] : row.fractions) {
            double expected = totals.count(row.task)
                                  ? double(counts[row.task][source]) / double(totals[row.task])
                                  : 0.0;
            CHECK(fraction == doctest::Approx(expected).epsilon(1e-12));
            sum += fraction;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("proportions refuse baseline runs") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    RunConfig config = fixture_config(tmp.path, "baseline");
    run_benchmark(config, gateway);
    CHECK_THROWS_AS(source_proportions(config.out_dir, gateway, 10), ValidationError);
}

TEST_CASE("item errors are recorded per item and mark the run degraded past 20 percent") {
    TempDir tmp;
    GatewayConfig cfg;
    cfg.api_base = "http://127.0.0.1:9"; // nothing listens on the discard port
    cfg.initial_backoff = std::chrono::milliseconds(1);
    Gateway gateway(std::move(cfg));
    RunConfig config = fixture_config(tmp.path, "baseline");
    config.model = "gpt-3.5-turbo"; // real profile, unreachable endpoint
    Report report = run_benchmark(config, gateway);
    CHECK(report.errored_items == 10);
    CHECK(report.degraded);
    auto items = load_items(config.out_dir);
    for (const auto& item : items) {
        CHECK(item.errored());
        CHECK(item.scores.empty());
    }
    // errored items still aggregate as zeros
    CHECK(report.overall == 0.0);
}

TEST_CASE("a warm cache replays a full run with zero network requests") {
    TempDir tmp;
    httplib::Server server;
    std::atomic<int> requests{0};
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    requests++;
                    auto body = nlohmann::json::parse(req.body);
                    std::string content =
                        "answer " + std::to_string(body["messages"][0]["content"]
                                                       .get<std::string>()
                                                       .size());
                    nlohmann::json reply = {
                        {"choices",
                         {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
                    res.set_content(reply.dump(), "application/json");
                });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread listener([&]() { server.listen_after_bind(); });
    server.wait_until_ready();

    GatewayConfig cfg;
    cfg.api_base = "http://127.0.0.1:" + std::to_string(port);
    cfg.cache_dir = tmp.path / "cache";
    Gateway gateway(std::move(cfg));

    RunConfig config = fixture_config(tmp.path, "baseline");
    config.model = "gpt-3.5-turbo";
    run_benchmark(config, gateway);
    int cold = requests.load();
    CHECK(cold == 10);
    std::string items_first = read_file(config.out_dir / "items.jsonl");

    run_benchmark(config, gateway);
    CHECK(requests.load() == cold); // fully warm: no network at all
    CHECK(read_file(config.out_dir / "items.jsonl") == items_first);

    server.stop();
    listener.join();
}

TEST_CASE("dataset composite follows the declared primary-metric rule") {
    TempDir tmp;
    Gateway gateway{GatewayConfig{}};
    RunConfig config = fixture_config(tmp.path, "baseline");
    Report report = run_benchmark(config, gateway);
    // mol_instructions composite = mean over its four tasks' primaries
    double expected = 0.0;
    size_t tasks = 0;
    for (const auto& [task_key, metrics] : report.per_task) {
        if (task_key.rfind("mol_instructions/", 0) != 0) continue;
        QuestionKind kind =
            task_key.find("molecule_design") != std::string::npos ||
                    task_key.find("forward_reaction") != std::string::npos
                ? QuestionKind::open_molecule
                : (task_key.find("description_generation") != std::string::npos
                       ? QuestionKind::open_text
                       : QuestionKind::property_numeric);
        expected += metrics.at(primary_metric_for(kind));
        ++tasks;
    }
    expected /= double(tasks);
    CHECK(report.per_dataset.at("mol_instructions") == doctest::Approx(expected).epsilon(1e-12));

    // overall = unweighted mean of the dataset composites
    double overall = 0;
    for (const auto& [dataset, composite] : report.per_dataset) overall += composite;
    overall /= double(report.per_dataset.size());
    CHECK(report.overall == doctest::Approx(overall).epsilon(1e-12));
}

}
