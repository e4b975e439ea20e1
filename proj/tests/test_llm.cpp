#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "arete/llm.hpp"

using namespace arete;
using namespace std::chrono_literals;

namespace {

std::filesystem::path test_dir() { return std::filesystem::path(ARETE_TEST_DIR); }

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("arete_llm_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Manual clock plus a sleeper that advances it. Sleeping is the only way time
// moves, which makes dispatch schedules exactly reproducible.
struct FakeTime {
    std::chrono::milliseconds now{0};
    std::vector<std::chrono::milliseconds> sleeps;
    std::mutex mutex;

    Clock clock() {
        return [this] {
            std::lock_guard lk(mutex);
            return std::chrono::steady_clock::time_point(now);
        };
    }
    Sleeper sleeper() {
        return [this](std::chrono::milliseconds d) {
            std::lock_guard lk(mutex);
            now += d;
            sleeps.push_back(d);
        };
    }
    std::chrono::milliseconds total_slept() {
        std::lock_guard lk(mutex);
        std::chrono::milliseconds sum{0};
        for (auto d : sleeps) sum += d;
        return sum;
    }
};

Chunk make_chunk(std::string text, std::string doc = "docA", int index = 0) {
    Chunk c;
    c.document_id = std::move(doc);
    c.index = index;
    c.text = std::move(text);
    c.token_estimate = static_cast<int>((c.text.size() + 3) / 4);
    return c;
}

// Loopback chat-completions stub. The handler decides the status sequence;
// every request body and header set is kept for inspection.
struct StubServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;
    std::mutex mutex;
    std::vector<std::string> bodies;
    std::vector<std::string> auth_headers;
    std::vector<int> statuses;  // consumed front to back; last repeats
    std::string reply_content = "| Aname | Bplace | 1, 2 |";
    std::string raw_body;  // when non-empty, sent verbatim on 200

    explicit StubServer(std::vector<int> status_plan = {200})
        : statuses(std::move(status_plan)) {
        server.Post("/v1/chat/completions",
                    [this](const httplib::Request& req, httplib::Response& res) {
                        int status;
                        {
                            std::lock_guard lk(mutex);
                            bodies.push_back(req.body);
                            auth_headers.push_back(req.get_header_value("Authorization"));
                            status = statuses.size() > 1 ? statuses.front() : statuses.back();
                            if (statuses.size() > 1) statuses.erase(statuses.begin());
                        }
                        res.status = status;
                        if (status == 200) {
                            const std::string body =
                                raw_body.empty()
                                    ? nlohmann::json{{"choices",
                                                      {{{"message",
                                                         {{"role", "assistant"},
                                                          {"content", reply_content}}}}}}}
                                          .dump()
                                    : raw_body;
                            res.set_content(body, "application/json");
                        } else {
                            res.set_content("{\"error\":\"nope\"}", "application/json");
                        }
                    });
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~StubServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1"; }
    std::size_t hits() {
        std::lock_guard lk(mutex);
        return bodies.size();
    }
};

LlmConfig stub_config(const StubServer& stub) {
    LlmConfig cfg;
    cfg.endpoint_url = stub.url();
    cfg.api_key = "sk-test-key-9876";
    cfg.requests_per_minute = 1000;  // keep the limiter out of the way
    return cfg;
}

LlmHooks fake_hooks(FakeTime& t) {
    LlmHooks h;
    h.clock = t.clock();
    h.sleep = t.sleeper();
    return h;
}

ErrorCode completion_error(LlmClient& client, const PromptText& prompt) {
    try {
        client.request_completion(prompt);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected the completion to throw");
    return ErrorCode::io_error;
}

} // namespace

TEST_CASE("prompt is the pinned instruction, a newline, then the chunk verbatim") {
    const std::string instruction =
        read_file(test_dir() / "fixtures" / "prompt_instruction.txt");
    REQUIRE(!instruction.empty());
    CHECK(std::string(kExtractionInstruction) == instruction);

    const Chunk chunk = make_chunk("Pardosa sp. was seen at Turku (60.45 N, 22.26 E).",
                                   "survey_2023", 4);
    const PromptText p = build_prompt(chunk);
    CHECK(p.text == instruction + "\n" + chunk.text);
    CHECK(p.chunk_ref.document_id == "survey_2023");
    CHECK(p.chunk_ref.chunk_index == 4);

    CHECK_THROWS_AS(build_prompt(make_chunk("")), Error);
    try {
        build_prompt(make_chunk(""));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_argument);
    }
}

TEST_CASE("secret redaction keeps only the last four characters") {
    CHECK(redact_secret("key sk-abcdef123 used twice sk-abcdef123.", "sk-abcdef123") ==
          "key ***f123 used twice ***f123.");
    CHECK(redact_secret("nothing to hide", "sk-abcdef123") == "nothing to hide");
    // keys shorter than five characters are left alone, redaction would
    // reveal as much as it hides
    CHECK(redact_secret("pin 1234 here", "1234") == "pin 1234 here");
    CHECK(redact_secret("", "sk-abcdef123") == "");
}

TEST_CASE("sha256 hex matches published vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abc") == sha256_hex("abc"));
    CHECK(sha256_hex("abd") != sha256_hex("abc"));
}

TEST_CASE("config validation and tier defaults") {
    LlmConfig cfg;
    CHECK(cfg.effective_rpm() == 3);
    cfg.tier = Tier::premium;
    CHECK(cfg.effective_rpm() == 500);
    cfg.requests_per_minute = 42;
    CHECK(cfg.effective_rpm() == 42);

    LlmConfig bad;
    bad.endpoint_url = "";
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = LlmConfig{};
    bad.max_retries = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = LlmConfig{};
    bad.timeout_seconds = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rate limiter defers the fourth dispatch of a minute") {
    FakeTime t;
    RateLimiter limiter(3, 60s, t.clock(), t.sleeper());
    std::vector<std::chrono::steady_clock::time_point> stamps;
    for (int i = 0; i < 5; ++i) stamps.push_back(limiter.acquire());

    // first three go out immediately, the fourth waits for the window to age out
    CHECK(stamps[1] - stamps[0] == 0ms);
    CHECK(stamps[2] - stamps[0] == 0ms);
    CHECK(stamps[3] - stamps[0] >= 60s);
    CHECK(stamps[4] - stamps[0] >= 60s);

    // sliding-window invariant over the whole schedule
    for (std::size_t i = 0; i < stamps.size(); ++i) {
        int in_window = 0;
        for (std::size_t j = 0; j < stamps.size(); ++j)
            if (stamps[j] >= stamps[i] && stamps[j] - stamps[i] < 60s) ++in_window;
        CHECK(in_window <= 3);
    }
    CHECK(t.total_slept() >= 60s);
}

TEST_CASE("rate limiter stays silent under the budget") {
    FakeTime t;
    RateLimiter limiter(500, 60s, t.clock(), t.sleeper());
    for (int i = 0; i < 20; ++i) limiter.acquire();
    CHECK(t.sleeps.empty());
    CHECK_THROWS_AS(RateLimiter(0, 60s, t.clock(), t.sleeper()), Error);
}

TEST_CASE("fixture store records and replays by prompt hash") {
    const auto dir = fresh_dir("record");
    const PromptText prompt = build_prompt(make_chunk("Some survey text.", "demo", 0));
    {
        FixtureStore store(dir);
        CHECK_THROWS_AS(store.replay_completion(prompt), Error);
        store.record(prompt, "| Lycosa tarantula | Rome | 41.9, 12.5 |");
    }
    FixtureStore reloaded(dir);
    const CompletionResult r = reloaded.replay_completion(prompt);
    CHECK(r.text == "| Lycosa tarantula | Rome | 41.9, 12.5 |");
    CHECK(r.backend == CompletionBackend::replay);
    CHECK(r.attempts == 1);
    CHECK(r.prompt_ref.document_id == "demo");
}

TEST_CASE("fixture store falls back to the chunk reference") {
    const auto dir = fresh_dir("refonly");
    // hand-written record with no usable hash, as checked-in fixtures are
    {
        std::ofstream os(dir / "manual.json");
        os << R"({"chunk_ref":{"document_id":"docA","chunk_index":2},)"
           << R"("response_text":"via ref"})";
    }
    // junk that the loader must skip
    { std::ofstream os(dir / "notes.txt"); os << "not a fixture"; }
    { std::ofstream os(dir / "broken.json"); os << "{nope"; }
    { std::ofstream os(dir / "other.json"); os << R"({"foo":1})"; }

    FixtureStore store(dir);
    const PromptText hit = build_prompt(make_chunk("any text at all", "docA", 2));
    CHECK(store.replay_completion(hit).text == "via ref");

    const PromptText miss = build_prompt(make_chunk("any text at all", "docA", 3));
    try {
        store.replay_completion(miss);
        FAIL("expected fixture_missing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fixture_missing);
    }

    CHECK_THROWS_AS(FixtureStore(dir / "does_not_exist"), Error);
}

TEST_CASE("client sends a single user message at temperature zero") {
    StubServer stub;
    FakeTime t;
    LlmConfig cfg = stub_config(stub);
    LlmClient client(cfg, fake_hooks(t));

    const PromptText prompt = build_prompt(make_chunk("text with coords 1.5, 2.5"));
    const CompletionResult result = client.request_completion(prompt);
    CHECK(result.text == "| Aname | Bplace | 1, 2 |");
    CHECK(result.attempts == 1);
    CHECK(result.backend == CompletionBackend::live);
    CHECK(result.prompt_ref.document_id == "docA");

    REQUIRE(stub.hits() == 1);
    CHECK(stub.auth_headers[0] == "Bearer sk-test-key-9876");
    const auto body = nlohmann::json::parse(stub.bodies[0]);
    CHECK(body["model"] == cfg.model_name);
    CHECK(body["temperature"] == 0);
    REQUIRE(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == prompt.text);
}

TEST_CASE("auth failures are terminal") {
    StubServer stub({401});
    FakeTime t;
    LlmClient client(stub_config(stub), fake_hooks(t));
    CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
          ErrorCode::auth_error);
    CHECK(stub.hits() == 1);  // no retry on a rejected key
    CHECK(t.sleeps.empty());

    StubServer forbidden({403});
    LlmClient client2(stub_config(forbidden), fake_hooks(t));
    CHECK(completion_error(client2, build_prompt(make_chunk("x"))) ==
          ErrorCode::auth_error);
}

TEST_CASE("persistent 429 exhausts the retry budget with growing backoff") {
    StubServer stub({429});
    FakeTime t;
    LlmConfig cfg = stub_config(stub);
    cfg.max_retries = 2;
    LlmClient client(cfg, fake_hooks(t));

    CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
          ErrorCode::rate_limit_exhausted);
    CHECK(stub.hits() == 3);  // max_retries + 1 total attempts
    CHECK(client.request_times().size() == 3);

    REQUIRE(t.sleeps.size() == 2);
    const auto base = LlmHooks{}.backoff_base;
    CHECK(t.sleeps[0] >= base);
    CHECK(t.sleeps[0] < 2 * base);
    CHECK(t.sleeps[1] >= 2 * base);
    CHECK(t.sleeps[1] < 4 * base);
    CHECK(t.sleeps[1] > t.sleeps[0]);
}

TEST_CASE("a retry budget of zero means exactly one attempt") {
    StubServer stub({429});
    FakeTime t;
    LlmConfig cfg = stub_config(stub);
    cfg.max_retries = 0;
    LlmClient client(cfg, fake_hooks(t));
    CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
          ErrorCode::rate_limit_exhausted);
    CHECK(stub.hits() == 1);
    CHECK(t.sleeps.empty());
}

TEST_CASE("transient failures recover and the attempt count is faithful") {
    SUBCASE("two 429s then success") {
        StubServer stub({429, 429, 200});
        FakeTime t;
        LlmConfig cfg = stub_config(stub);
        cfg.max_retries = 2;
        LlmClient client(cfg, fake_hooks(t));
        const auto result = client.request_completion(build_prompt(make_chunk("x")));
        CHECK(result.attempts == 3);
        CHECK(stub.hits() == 3);
        CHECK(client.request_times().size() == 3);
    }
    SUBCASE("one 500 then success") {
        StubServer stub({500, 200});
        FakeTime t;
        LlmClient client(stub_config(stub), fake_hooks(t));
        const auto result = client.request_completion(build_prompt(make_chunk("x")));
        CHECK(result.attempts == 2);
        CHECK(stub.hits() == 2);
    }
    SUBCASE("persistent 503 becomes api_error") {
        StubServer stub({503});
        FakeTime t;
        LlmConfig cfg = stub_config(stub);
        cfg.max_retries = 1;
        LlmClient client(cfg, fake_hooks(t));
        CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
              ErrorCode::api_error);
        CHECK(stub.hits() == 2);
    }
}

TEST_CASE("unexpected statuses and bodies map to precise errors") {
    SUBCASE("404 is an api error, not a retry") {
        StubServer stub({404});
        FakeTime t;
        LlmClient client(stub_config(stub), fake_hooks(t));
        CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
              ErrorCode::api_error);
        CHECK(stub.hits() == 1);
    }
    SUBCASE("non-JSON body") {
        StubServer stub;
        stub.raw_body = "definitely : not json";
        FakeTime t;
        LlmClient client(stub_config(stub), fake_hooks(t));
        CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
              ErrorCode::malformed_response);
    }
    SUBCASE("JSON without choices") {
        StubServer stub;
        stub.raw_body = R"({"choices":[]})";
        FakeTime t;
        LlmClient client(stub_config(stub), fake_hooks(t));
        CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
              ErrorCode::malformed_response);
    }
    SUBCASE("choices without message content") {
        StubServer stub;
        stub.raw_body = R"({"choices":[{"message":{"role":"assistant"}}]})";
        FakeTime t;
        LlmClient client(stub_config(stub), fake_hooks(t));
        CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
              ErrorCode::malformed_response);
    }
}

TEST_CASE("unreachable endpoints become network errors") {
    FakeTime t;
    LlmConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:1/v1";  // nothing listens on port 1
    cfg.api_key = "sk-test-key-9876";
    cfg.requests_per_minute = 1000;
    LlmClient client(cfg, fake_hooks(t));
    CHECK(completion_error(client, build_prompt(make_chunk("x"))) ==
          ErrorCode::network_error);

    LlmConfig no_scheme = cfg;
    no_scheme.endpoint_url = "not a url";
    LlmClient client2(no_scheme, fake_hooks(t));
    CHECK(completion_error(client2, build_prompt(make_chunk("x"))) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("free-tier pacing holds across consecutive completions") {
    StubServer stub;
    FakeTime t;
    LlmConfig cfg = stub_config(stub);
    cfg.requests_per_minute = 2;
    LlmClient client(cfg, fake_hooks(t));

    for (int i = 0; i < 3; ++i)
        client.request_completion(build_prompt(make_chunk("chunk", "doc", i)));

    const auto times = client.request_times();
    REQUIRE(times.size() == 3);
    CHECK(times[1] - times[0] < 60s);
    CHECK(times[2] - times[0] >= 60s);
    for (std::size_t i = 0; i < times.size(); ++i) {
        int in_window = 0;
        for (std::size_t j = 0; j < times.size(); ++j)
            if (times[j] >= times[i] && times[j] - times[i] < 60s) ++in_window;
        CHECK(in_window <= 2);
    }
    CHECK(stub.hits() == 3);
}

TEST_CASE("log lines never contain the raw key") {
    StubServer stub;
    FakeTime t;
    std::vector<std::string> lines;
    LlmHooks hooks = fake_hooks(t);
    hooks.log = [&lines](std::string_view line) { lines.emplace_back(line); };
    LlmConfig cfg = stub_config(stub);
    LlmClient client(cfg, hooks);
    client.request_completion(build_prompt(make_chunk("x")));

    CHECK(!lines.empty());
    for (const auto& line : lines)
        CHECK(line.find(cfg.api_key) == std::string::npos);
}
