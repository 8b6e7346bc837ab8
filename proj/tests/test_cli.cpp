#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "chemrag/util.hpp"

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("chemrag_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    TempDir io;
    auto out_path = io.path / "out.txt";
    auto err_path = io.path / "err.txt";
    std::string command = std::string(CHEMRAG_BIN) + " " + args + " >" + out_path.string() +
                          " 2>" + err_path.string();
    int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = chemrag::read_file(out_path);
    result.err = chemrag::read_file(err_path);
    return result;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("mol validate prints valid and exits zero") {
    CliResult r = run_cli("mol validate CCO");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "valid\n");

    CliResult bad = run_cli("mol validate 'C(C'");
    CHECK(bad.exit_code == 0); // computing validity succeeded
    CHECK(bad.out == "invalid\n");
    CHECK(bad.err.find("unclosed branch") != std::string::npos);
}

TEST_CASE("mol canon emits the canonical form; parse errors exit 1") {
    CliResult r = run_cli("mol canon OCC");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "CCO\n");

    CliResult bad = run_cli("mol canon 'C1CC'");
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.find("unmatched ring bond") != std::string::npos);
}

TEST_CASE("mol sim prints a json value") {
    CliResult r = run_cli("mol sim --kind morgan CCO OCC");
    CHECK(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["value"] == 1.0);
}

TEST_CASE("unknown subcommand exits 1 with usage") {
    CliResult r = run_cli("frobnicate");
    CHECK(r.exit_code == 1);
}

TEST_CASE("score pair mode emits json") {
    CliResult r = run_cli("score --metric levenshtein --pred kitten --gold sitting");
    CHECK(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["value"].get<double>() == doctest::Approx(1.0 - 3.0 / 7.0));
}

TEST_CASE("ingest then index then retrieve returns k json lines") {
    TempDir tmp;
    auto raw = tmp.path / "raw.jsonl";
    {
        std::ofstream out(raw);
        for (int i = 0; i < 30; ++i) {
            nlohmann::json row = {{"source", "wikipedia"},
                                  {"external_id", std::to_string(i)},
                                  {"body", "benzene ring chemistry article number " +
                                               std::to_string(i)}};
            out << row.dump() << "\n";
        }
    }
    auto store = (tmp.path / "store.jsonl").string();
    CliResult ingest = run_cli("ingest --in " + raw.string() + " --source wikipedia --out " +
                               store);
    CHECK(ingest.exit_code == 0);
    CHECK(std::filesystem::exists(tmp.path / "store.jsonl.manifest.json"));

    CliResult build = run_cli("index build --corpus " + store + " --kind lexical --out " +
                              (tmp.path / "ix").string());
    CHECK(build.exit_code == 0);

    CliResult retrieve =
        run_cli("retrieve --index " + (tmp.path / "ix").string() + " --query benzene --k 5");
    CHECK(retrieve.exit_code == 0);
    std::istringstream lines(retrieve.out);
    std::string line;
    size_t count = 0;
    int last_rank = 0;
    while (std::getline(lines, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j["rank"] == ++last_rank);
        CHECK(j.contains("id"));
        CHECK(j.contains("score"));
        CHECK(j.contains("text"));
        ++count;
    }
    CHECK(count == 5);
}

TEST_CASE("validation failures exit 1 before side effects") {
    TempDir tmp;
    auto out = (tmp.path / "never.jsonl").string();
    CliResult r = run_cli("ingest --in /nonexistent/raw.jsonl --source wikipedia --out " + out);
    CHECK(r.exit_code == 2); // missing input is a runtime error
    CHECK_FALSE(std::filesystem::exists(out));

    CliResult bad_kind = run_cli("ingest --in /nonexistent/raw.jsonl --source bogus --out " + out);
    CHECK(bad_kind.exit_code == 1); // unknown source kind is a validation error
    CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("run exits 1 on a malformed config") {
    TempDir tmp;
    auto config = tmp.path / "run.json";
    chemrag::atomic_write_file(config, R"({"prompt_mode": "nonsense", "datasets": []})");
    CliResult r = run_cli("run --config " + config.string() + " --out " +
                          (tmp.path / "out").string());
    CHECK(r.exit_code == 1);
}

}
