#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "memanchor/corpus.hpp"
#include "memanchor/extract.hpp"

using namespace memanchor;

namespace {

std::filesystem::path fixture(const char* name) {
    return std::filesystem::path(MEMANCHOR_FIXTURE_DIR) / name;
}

std::filesystem::path write_temp(const char* name, const std::string& body) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::trunc);
    out << body;
    return path;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("toy fixture: 1 conversation, 3 sessions, 6 QA") {
    ConversationCorpus corpus = load_corpus(fixture("toy_corpus.json"));
    REQUIRE(corpus.conversations.size() == 1);
    CHECK(corpus.conversations[0].sessions.size() == 3);
    CHECK(corpus.conversations[0].qa.size() == 6);
    CHECK(corpus.warnings.empty());

    // all four categories appear
    bool seen[4] = {false, false, false, false};
    for (const QaItem& item : corpus.conversations[0].qa) {
        seen[static_cast<int>(item.category)] = true;
        CHECK(item.source_conversation_id == "conv-1");
    }
    for (bool s : seen) CHECK(s);
}

TEST_CASE("session order and speaker order are preserved") {
    ConversationCorpus corpus = load_corpus(fixture("toy_corpus.json"));
    const Conversation& conv = corpus.conversations[0];
    CHECK(conv.sessions[0].session_id == "s1");
    CHECK(conv.sessions[1].session_id == "s2");
    CHECK(conv.sessions[2].session_id == "s3");
    InteractionContext ctx = to_context(conv.sessions[0]);
    REQUIRE(ctx.speakers.size() == 2);
    CHECK(ctx.speakers[0] == "Melanie");
    CHECK(ctx.speakers[1] == "Caroline");
    CHECK(ctx.text.rfind("Melanie: I went to a pottery class", 0) == 0);
}

TEST_CASE("empty conversations array") {
    auto path = write_temp("memanchor_empty_corpus.json", R"({"conversations": []})");
    ConversationCorpus corpus = load_corpus(path);
    CHECK(corpus.conversations.empty());
    std::filesystem::remove(path);
}

TEST_CASE("unknown category label is a category error") {
    auto path = write_temp("memanchor_bad_category.json", R"({
        "conversations": [{
            "conversation_id": "c",
            "sessions": [],
            "qa": [{"question": "q", "answer": "a", "category": "causal"}]
        }]})");
    CHECK_THROWS_AS(load_corpus(path), CategoryError);
    std::filesystem::remove(path);
}

TEST_CASE("schema violation names the record") {
    auto path = write_temp("memanchor_bad_schema.json", R"({
        "conversations": [
            {"conversation_id": "ok", "sessions": [], "qa": []},
            {"conversation_id": "broken", "sessions": [{"session_id": "s1"}], "qa": []}
        ]})");
    try {
        load_corpus(path);
        FAIL("expected ParseError");
    } catch (const ParseError& ex) {
        CHECK(std::string(ex.what()).find("conversation 1") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.json"), NotFoundError);
}

TEST_CASE("LoCoMo adapter maps sessions, timestamps, and category codes") {
    ConversationCorpus corpus = load_corpus(fixture("locomo_sample.json"));
    REQUIRE(corpus.conversations.size() == 1);
    const Conversation& conv = corpus.conversations[0];
    CHECK(conv.conversation_id == "locomo-sample-1");
    REQUIRE(conv.sessions.size() == 2);
    CHECK(conv.sessions[0].session_id == "session_1");
    CHECK(conv.sessions[0].timestamp == "2:10 pm on 12 January, 2023");
    CHECK(conv.sessions[1].session_id == "session_2");
    REQUIRE(conv.sessions[0].turns.size() == 2);
    CHECK(conv.sessions[0].turns[0].speaker == "Nina");

    // image caption folded into the turn text
    CHECK(conv.sessions[1].turns[0].text.find("[image: a man running on a trail]") !=
          std::string::npos);

    // category 5 dropped with a warning, the rest mapped
    REQUIRE(conv.qa.size() == 4);
    CHECK(conv.qa[0].category == QaCategory::single_hop);
    CHECK(conv.qa[1].category == QaCategory::multi_hop);
    CHECK(conv.qa[2].category == QaCategory::temporal);
    CHECK(conv.qa[3].category == QaCategory::open_domain);
    REQUIRE(corpus.warnings.size() == 1);
    CHECK(corpus.warnings[0].find("category 5") != std::string::npos);
}

TEST_CASE("multi corpus: 35 session contexts ingest as 35 graph contexts") {
    ConversationCorpus corpus = load_corpus(fixture("multi_corpus.json"));

    // independent recount straight off the document
    std::ifstream in(fixture("multi_corpus.json"));
    nlohmann::json doc = nlohmann::json::parse(in);
    std::size_t session_records = 0;
    for (const auto& conv : doc["conversations"]) session_records += conv["sessions"].size();
    CHECK(session_records == 35);

    MemoryGraph graph(64);
    EmbeddingProviderSpec provider;
    provider.dimension = 64;
    LmBackend extractor{LmBackend::Kind::stub_extractor, {}};
    std::vector<InteractionContext> contexts;
    for (const Conversation& conv : corpus.conversations) {
        for (const CorpusSession& session : conv.sessions) contexts.push_back(to_context(session));
    }
    ingest_corpus(contexts, extractor, provider, graph);
    CHECK(graph.stats().num_contexts == session_records);
    CHECK(graph.stats().num_contexts == 35);
}

}  // TEST_SUITE
