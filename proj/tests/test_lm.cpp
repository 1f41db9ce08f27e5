#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "memanchor/extract.hpp"
#include "memanchor/lm.hpp"

using namespace memanchor;

namespace {

// Local mock endpoint for the remote-backend tests.
class ScopedServer {
public:
    ScopedServer() = default;

    void start() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~ScopedServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    httplib::Server& raw() { return server_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

LmBackend remote_backend(const std::string& base_url, int max_retries = 1) {
    LmBackend backend;
    backend.kind = LmBackend::Kind::remote;
    backend.endpoint.base_url = base_url;
    backend.endpoint.model_name = "test-model";
    backend.endpoint.api_key_env_var = "";  // no key for the mock
    backend.endpoint.timeout = std::chrono::milliseconds(2000);
    backend.endpoint.max_retries = max_retries;
    return backend;
}

}  // namespace

TEST_SUITE("lm") {

TEST_CASE("parse_json_string_list") {
    SUBCASE("plain array") {
        CHECK(parse_json_string_list(R"(["a", "b"])") == std::vector<std::string>{"a", "b"});
    }
    SUBCASE("code fence and prose around the array") {
        auto got = parse_json_string_list("Here you go:\n```json\n[\"x\"]\n```");
        CHECK(got == std::vector<std::string>{"x"});
    }
    SUBCASE("no array present") {
        CHECK_THROWS_AS(parse_json_string_list("no list here"), ExtractionParseError);
    }
    SUBCASE("empty and whitespace elements dropped") {
        CHECK(parse_json_string_list(R"(["a", "", "   ", "b"])") ==
              std::vector<std::string>{"a", "b"});
    }
    SUBCASE("non-string array is skipped in favor of a later string array") {
        CHECK(parse_json_string_list(R"(counts [1, 2] then ["ok"])") ==
              std::vector<std::string>{"ok"});
    }
    SUBCASE("brackets inside string literals do not confuse the scanner") {
        CHECK(parse_json_string_list(R"((see [1]) ["a[b]c", "d"])") ==
              std::vector<std::string>{"a[b]c", "d"});
    }
    SUBCASE("round trip of arbitrary nonempty strings") {
        std::mt19937 rng(3);
        std::uniform_int_distribution<int> len(1, 12);
        std::uniform_int_distribution<int> ch(32, 126);
        for (int iter = 0; iter < 50; ++iter) {
            std::vector<std::string> original;
            for (int i = 0; i < 5; ++i) {
                std::string s;
                int n = len(rng);
                for (int j = 0; j < n; ++j) s.push_back(static_cast<char>(ch(rng)));
                if (text::trim(s).empty()) s += "x";
                original.push_back(text::trim(s));
            }
            nlohmann::json serialized = original;
            CHECK(parse_json_string_list(serialized.dump()) == original);
        }
    }
}

TEST_CASE("parse_judge_label") {
    SUBCASE("json object with label field") {
        CHECK(parse_judge_label(R"({"label": "CORRECT"})") == JudgeLabel::correct);
        CHECK(parse_judge_label(R"(Sure: {"label": "wrong"} done)") == JudgeLabel::wrong);
    }
    SUBCASE("token scan") {
        CHECK(parse_judge_label("reasoning... WRONG") == JudgeLabel::wrong);
        CHECK(parse_judge_label("the answer matches. CORRECT") == JudgeLabel::correct);
    }
    SUBCASE("both tokens is ambiguous") {
        CHECK_THROWS_AS(parse_judge_label("CORRECT and WRONG"), AmbiguousVerdictError);
    }
    SUBCASE("neither token is ambiguous") {
        CHECK_THROWS_AS(parse_judge_label("cannot tell"), AmbiguousVerdictError);
    }
    SUBCASE("INCORRECT is not CORRECT") {
        CHECK(parse_judge_label("that is INCORRECT... WRONG") == JudgeLabel::wrong);
    }
}

TEST_CASE("stub extractor emits one speaker-prefixed fact per turn") {
    std::vector<ChatMessage> messages = {
        system_message("x"),
        user_message("Speakers: Alice, Bob\nTime: noon\nDialogue:\nAlice: I bought a bike\nBob: "
                     "I sold my car")};
    std::string out = complete({LmBackend::Kind::stub_extractor, {}}, messages);
    auto facts = parse_json_string_list(out);
    REQUIRE(facts.size() == 2);
    CHECK(facts[0] == "Alice said: I bought a bike");
    CHECK(facts[1] == "Bob said: I sold my car");
}

TEST_CASE("stub extractor truncates long turns to 200 chars") {
    std::string long_turn(500, 'a');
    std::vector<ChatMessage> messages = {
        user_message("Dialogue:\nAlice: " + long_turn)};
    auto facts = parse_json_string_list(complete({LmBackend::Kind::stub_extractor, {}}, messages));
    REQUIRE(facts.size() == 1);
    CHECK(facts[0] == "Alice said: " + std::string(200, 'a'));
}

TEST_CASE("stub integrator narrates the focus topics in order") {
    std::vector<ChatMessage> messages = {
        system_message("x"),
        user_message("Focus Topics:\n- A said: first\n- B said: second\n\nSource Contexts:\n\n[t] "
                     "(speakers: A)\nA: raw\n")};
    auto narratives =
        parse_json_string_list(complete({LmBackend::Kind::stub_integrator, {}}, messages));
    REQUIRE(narratives.size() == 1);
    CHECK(narratives[0] == "Event linking 2 contexts: A said: first; B said: second");
}

TEST_CASE("stub answerer returns the highest-overlap sentence") {
    std::string block = "## Memories\n\nAlice: I bought a red bike on Tuesday\nBob: the weather "
                        "was awful\n\n## Events\n";
    std::vector<ChatMessage> messages = {
        user_message(block + "\n\nQuestion: What did Alice buy on Tuesday?")};
    std::string answer = complete({LmBackend::Kind::stub_answerer, {}}, messages);
    CHECK(answer == "Alice: I bought a red bike on Tuesday");
}

TEST_CASE("stub answerer is deterministic and safe on empty blocks") {
    std::vector<ChatMessage> messages = {user_message("\n\nQuestion: anything?")};
    std::string a = complete({LmBackend::Kind::stub_answerer, {}}, messages);
    std::string b = complete({LmBackend::Kind::stub_answerer, {}}, messages);
    CHECK(a == b);
    CHECK_FALSE(a.empty());
}

TEST_CASE("stub judge labels by normalized substring") {
    auto render = [](const std::string& gold, const std::string& generated) {
        return prompts::build_judge_prompt("Do you remember?", gold, generated);
    };
    LmBackend judge{LmBackend::Kind::stub_judge, {}};
    SUBCASE("exact match is CORRECT") {
        std::string out = complete(judge, {user_message(render("A shell necklace", "A shell necklace"))});
        CHECK(out.find(R"({"label": "CORRECT"})") != std::string::npos);
        CHECK(parse_judge_label(out) == JudgeLabel::correct);
    }
    SUBCASE("substring after normalization is CORRECT") {
        std::string out = complete(
            judge, {user_message(render("A shell necklace", "she bought a shell necklace in Hawaii"))});
        CHECK(parse_judge_label(out) == JudgeLabel::correct);
    }
    SUBCASE("disjoint answer is WRONG") {
        std::string out = complete(judge, {user_message(render("A shell necklace", "a new guitar"))});
        CHECK(parse_judge_label(out) == JudgeLabel::wrong);
    }
}

TEST_CASE("stubs are pure functions of their messages") {
    std::vector<ChatMessage> messages = {user_message("Dialogue:\nA: hello there")};
    LmBackend extractor{LmBackend::Kind::stub_extractor, {}};
    CHECK(complete(extractor, messages) == complete(extractor, messages));
}

TEST_CASE("complete validates message preconditions") {
    LmBackend backend{LmBackend::Kind::stub_answerer, {}};
    CHECK_THROWS_AS(complete(backend, {}), InvalidInputError);
    CHECK_THROWS_AS(complete(backend, {user_message("")}), InvalidInputError);
}

TEST_CASE("remote backend happy path with usage accounting") {
    ScopedServer server;
    server.raw().Post("/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        CHECK(body["model"] == "test-model");
        CHECK(body["temperature"] == 0.0);
        REQUIRE(body["messages"].is_array());
        nlohmann::json reply = {
            {"choices", {{{"message", {{"role", "assistant"}, {"content", "hello back"}}}}}},
            {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 5}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.start();

    UsageMeter usage;
    std::string out = complete(remote_backend(server.base_url()),
                               {system_message("s"), user_message("hi")}, &usage);
    CHECK(out == "hello back");
    CHECK(usage.prompt_tokens() == 12);
    CHECK(usage.completion_tokens() == 5);
    CHECK(usage.calls() == 1);
}

TEST_CASE("remote backend retries on server errors then succeeds") {
    ScopedServer server;
    std::atomic<int> hits{0};
    server.raw().Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (hits.fetch_add(1) < 2) {
            res.status = 500;
            res.set_content("boom", "text/plain");
            return;
        }
        nlohmann::json reply = {
            {"choices", {{{"message", {{"content", "recovered"}}}}}},
            {"usage", {{"prompt_tokens", 1}, {"completion_tokens", 1}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.start();

    std::string out = complete(remote_backend(server.base_url(), 3), {user_message("hi")});
    CHECK(out == "recovered");
    CHECK(hits.load() == 3);
}

TEST_CASE("remote backend exhausts retries against a failing server") {
    ScopedServer server;
    std::atomic<int> hits{0};
    server.raw().Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        hits.fetch_add(1);
        res.status = 503;
    });
    server.start();

    int max_retries = 2;
    CHECK_THROWS_AS(complete(remote_backend(server.base_url(), max_retries), {user_message("hi")}),
                    TransportError);
    // exactly max_retries + 1 attempts
    CHECK(hits.load() == max_retries + 1);
}

TEST_CASE("unreachable endpoint reports the attempt count") {
    LmBackend backend = remote_backend("http://127.0.0.1:9", 2);
    backend.endpoint.timeout = std::chrono::milliseconds(300);
    try {
        complete(backend, {user_message("hi")});
        FAIL("expected TransportError");
    } catch (const TransportError& ex) {
        CHECK(std::string(ex.what()).find("3 attempts") != std::string::npos);
    }
}

TEST_CASE("empty model output raises EmptyCompletionError") {
    ScopedServer server;
    server.raw().Post("/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        nlohmann::json reply = {{"choices", {{{"message", {{"content", "  "}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.start();
    CHECK_THROWS_AS(complete(remote_backend(server.base_url(), 0), {user_message("hi")}),
                    EmptyCompletionError);
}

}  // TEST_SUITE
