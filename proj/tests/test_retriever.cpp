#include <doctest.h>

#include <atomic>
#include <filesystem>

#include "chemrag/retriever.hpp"
#include "chemrag/util.hpp"

using namespace chemrag;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("chemrag_retr_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

Snippet make_snippet(SourceKind source, const std::string& text) {
    Snippet s;
    s.source = source;
    s.text = text;
    s.token_count = count_whitespace_tokens(text);
    s.id = snippet_id(source, text);
    return s;
}

std::vector<Snippet> fixture_corpus() {
    std::vector<Snippet> out;
    out.push_back(make_snippet(SourceKind::openstax, "benzene is an aromatic ring"));
    out.push_back(make_snippet(SourceKind::openstax, "ethanol is a simple alcohol"));
    out.push_back(make_snippet(SourceKind::wikipedia, "water dissolves polar compounds"));
    out.push_back(make_snippet(SourceKind::wikipedia, "benzene reacts with bromine"));
    for (int i = 0; i < 16; ++i)
        out.push_back(make_snippet(SourceKind::pubmed,
                                   "filler abstract number " + std::to_string(i) +
                                       " about chemistry topics"));
    return out;
}

struct Indexes {
    TempDir root;
    RetrieverSetup setup;
};

Indexes build_all(Gateway& gateway) {
    Indexes ix;
    auto corpus = fixture_corpus();
    LexicalIndex::build(corpus).save(ix.root.path / "bm25");
    auto embedder = gateway.embedder_for("hash32");
    DenseIndex dense = DenseIndex::build(corpus, *embedder);
    dense.save(ix.root.path / "contriever");
    dense.save(ix.root.path / "specter");
    dense.save(ix.root.path / "e5");
    ix.setup.index_dirs = {{"bm25", ix.root.path / "bm25"},
                           {"contriever", ix.root.path / "contriever"},
                           {"specter", ix.root.path / "specter"},
                           {"e5", ix.root.path / "e5"}};
    return ix;
}

}  // namespace

TEST_SUITE("retriever") {

TEST_CASE("k caps the result count and snippets resolve") {
    Gateway gateway{GatewayConfig{}};
    Indexes ix = build_all(gateway);
    Retriever retriever(ix.setup, gateway);
    auto hits = retriever.retrieve("bm25", "benzene chemistry", 5);
    CHECK(hits.size() <= 5);
    REQUIRE_FALSE(hits.empty());
    CHECK_FALSE(hits[0].snippet.text.empty());
}

TEST_CASE("query equal to a snippet text ranks it first under bm25") {
    Gateway gateway{GatewayConfig{}};
    Indexes ix = build_all(gateway);
    Retriever retriever(ix.setup, gateway);
    auto hits = retriever.retrieve("bm25", "benzene is an aromatic ring", 3);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].snippet.text == "benzene is an aromatic ring");
}

TEST_CASE("dense retrieval works through the configured profile") {
    Gateway gateway{GatewayConfig{}};
    Indexes ix = build_all(gateway);
    Retriever retriever(ix.setup, gateway);
    auto hits = retriever.retrieve("contriever", "ethanol is a simple alcohol", 4);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].snippet.text == "ethanol is a simple alcohol");
    CHECK(hits.size() == 4);
}

TEST_CASE("rrf fuses the four component retrievers") {
    Gateway gateway{GatewayConfig{}};
    Indexes ix = build_all(gateway);
    Retriever retriever(ix.setup, gateway);
    auto hits = retriever.retrieve("rrf", "benzene reactions", 5);
    CHECK(hits.size() == 5);
    RankedList list = retriever.ranked("rrf", "benzene reactions", 5);
    CHECK(list.well_ordered());

    // deterministic across calls
    auto again = retriever.retrieve("rrf", "benzene reactions", 5);
    REQUIRE(again.size() == hits.size());
    for (size_t i = 0; i < hits.size(); ++i) {
        CHECK(again[i].snippet.id == hits[i].snippet.id);
        CHECK(again[i].score == hits[i].score);
    }
}

TEST_CASE("missing index errors name the index to build") {
    Gateway gateway{GatewayConfig{}};
    Indexes ix = build_all(gateway);
    ix.setup.index_dirs.erase("specter");
    Retriever retriever(ix.setup, gateway);
    try {
        retriever.retrieve("rrf", "anything", 3);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("specter") != std::string::npos);
        CHECK(std::string(e.what()).find("index build") != std::string::npos);
    }
    CHECK_THROWS_AS(retriever.retrieve("nonexistent", "anything", 3), ConfigError);
}

}
