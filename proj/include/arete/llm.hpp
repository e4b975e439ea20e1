#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "arete/error.hpp"
#include "arete/ingest.hpp"

namespace arete {

enum class Tier { free, premium };
enum class CompletionBackend { live, replay };

// Instruction block prepended to every chunk sent for extraction. The wording
// is load-bearing: it pins the three-column pipe table, keeps localities
// verbatim, reserves "|" for the table, asks for coordinate-less localities,
// and excludes reference-section species.
inline constexpr std::string_view kExtractionInstruction =
    "Read the following document then reply only a table consisting of three "
    "columns, Species, Location, and Coordinates containing new geographic data "
    "and the in-text coordinates of species mentioned in the following document. "
    "Include locations as they are written in the text, aside from the special "
    "character: |. Include locations without coordinates. Do not include species "
    "with neither location nor coordinate data. Do not include those in "
    "scientific articles or outside references:";

struct LlmConfig {
    std::string endpoint_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string model_name = "gpt-3.5-turbo-1106";
    Tier tier = Tier::free;
    int requests_per_minute = 0;  // 0 = derive from tier
    int max_retries = 3;
    double timeout_seconds = 30.0;

    int effective_rpm() const {
        if (requests_per_minute > 0) return requests_per_minute;
        return tier == Tier::premium ? 500 : 3;
    }

    void validate() const {
        if (endpoint_url.empty())
            throw Error(ErrorCode::invalid_argument, "endpoint URL is empty");
        if (effective_rpm() < 1)
            throw Error(ErrorCode::invalid_argument, "requests_per_minute must be >= 1");
        if (max_retries < 0)
            throw Error(ErrorCode::invalid_argument, "max_retries must be >= 0");
        if (!(timeout_seconds > 0))
            throw Error(ErrorCode::invalid_argument, "timeout_seconds must be > 0");
    }
};

struct PromptText {
    std::string text;
    ChunkRef chunk_ref;
};

struct CompletionResult {
    std::string text;
    ChunkRef prompt_ref;
    int attempts = 1;
    CompletionBackend backend = CompletionBackend::live;
};

inline PromptText build_prompt(const Chunk& chunk) {
    if (chunk.text.empty())
        throw Error(ErrorCode::invalid_argument, "cannot build a prompt from an empty chunk");
    PromptText p;
    p.text.reserve(kExtractionInstruction.size() + 1 + chunk.text.size());
    p.text.append(kExtractionInstruction);
    p.text.push_back('\n');
    p.text.append(chunk.text);
    p.chunk_ref = ChunkRef{chunk.document_id, chunk.index};
    return p;
}

// Replaces occurrences of the key with a stub keeping only its last 4
// characters, so no longer fragment can leak into logs.
inline std::string redact_secret(std::string_view text, std::string_view secret) {
    if (secret.size() < 5) return std::string(text);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    const std::string replacement =
        "***" + std::string(secret.substr(secret.size() - 4));
    while (true) {
        const auto hit = text.find(secret, pos);
        if (hit == std::string_view::npos) {
            out.append(text.substr(pos));
            return out;
        }
        out.append(text.substr(pos, hit - pos));
        out.append(replacement);
        pos = hit + secret.size();
    }
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::io_error, "SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

using Clock = std::function<std::chrono::steady_clock::time_point()>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;
using LogSink = std::function<void(std::string_view)>;

// Test seams: a fake clock/sleep pair makes backoff and window arithmetic
// instantaneous while preserving the dispatch schedule.
struct LlmHooks {
    Clock clock = [] { return std::chrono::steady_clock::now(); };
    Sleeper sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    LogSink log;  // optional; lines are pre-redacted
    std::chrono::milliseconds backoff_base{2000};
    unsigned jitter_seed = 0;
};

// Sliding-window limiter: at most `max_per_window` dispatches in any window.
// Shared by concurrent workers; acquire() blocks (via the injected sleeper)
// until a slot frees up.
class RateLimiter {
public:
    RateLimiter(int max_per_window, std::chrono::seconds window,
                Clock clock, Sleeper sleep)
        : max_per_window_(max_per_window), window_(window),
          clock_(std::move(clock)), sleep_(std::move(sleep)) {
        if (max_per_window < 1)
            throw Error(ErrorCode::invalid_argument, "window size must be >= 1");
    }

    // Blocks until a dispatch slot is free, records the dispatch, and returns
    // its timestamp.
    std::chrono::steady_clock::time_point acquire() {
        std::unique_lock lock(mutex_);
        for (;;) {
            const auto now = clock_();
            while (!dispatches_.empty() && now - dispatches_.front() >= window_)
                dispatches_.pop_front();
            if (static_cast<int>(dispatches_.size()) < max_per_window_) {
                dispatches_.push_back(now);
                return now;
            }
            const auto wait = window_ - (now - dispatches_.front());
            lock.unlock();
            sleep_(std::chrono::duration_cast<std::chrono::milliseconds>(wait) +
                   std::chrono::milliseconds(1));
            lock.lock();
        }
    }

private:
    int max_per_window_;
    std::chrono::seconds window_;
    Clock clock_;
    Sleeper sleep_;
    std::mutex mutex_;
    std::deque<std::chrono::steady_clock::time_point> dispatches_;
};

namespace detail {

struct ParsedEndpoint {
    std::string host_port;  // scheme://host[:port]
    std::string base_path;  // possibly empty, no trailing slash
};

inline ParsedEndpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::invalid_argument, "endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedEndpoint out;
    if (path_start == std::string::npos) {
        out.host_port = url;
    } else {
        out.host_port = url.substr(0, path_start);
        out.base_path = url.substr(path_start);
    }
    while (!out.base_path.empty() && out.base_path.back() == '/')
        out.base_path.pop_back();
    return out;
}

} // namespace detail

// Chat-completions client for any OpenAI-compatible endpoint. One chunk per
// request, no conversation history, temperature pinned to 0.
class LlmClient {
public:
    explicit LlmClient(LlmConfig config, LlmHooks hooks = {})
        : config_(std::move(config)), hooks_(std::move(hooks)),
          limiter_(config_.effective_rpm(), std::chrono::seconds(60),
                   hooks_.clock, hooks_.sleep),
          jitter_rng_(hooks_.jitter_seed) {
        config_.validate();
    }

    CompletionResult request_completion(const PromptText& prompt) {
        const nlohmann::json body = {
            {"model", config_.model_name},
            {"messages", {{{"role", "user"}, {"content", prompt.text}}}},
            {"temperature", 0},
        };
        const std::string payload = body.dump();
        const auto endpoint = detail::parse_endpoint(config_.endpoint_url);
        const std::string path = endpoint.base_path + "/chat/completions";

        httplib::Client client(endpoint.host_port);
        client.set_connection_timeout(std::chrono::milliseconds(
            static_cast<int64_t>(config_.timeout_seconds * 1000)));
        client.set_read_timeout(std::chrono::milliseconds(
            static_cast<int64_t>(config_.timeout_seconds * 1000)));
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        int attempts = 0;
        for (;;) {
            limiter_.acquire();
            ++attempts;
            {
                std::lock_guard lk(log_mutex_);
                request_times_.push_back(hooks_.clock());
            }
            log("POST " + path + " model=" + config_.model_name +
                " attempt=" + std::to_string(attempts));
            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                const auto err = res.error();
                if (err == httplib::Error::ConnectionTimeout ||
                    err == httplib::Error::Read)
                    throw Error(ErrorCode::timeout,
                                "request timed out after " +
                                    std::to_string(config_.timeout_seconds) + " s");
                throw Error(ErrorCode::network_error,
                            "HTTP transport error: " + httplib::to_string(err));
            }
            log("HTTP " + std::to_string(res->status) + " (" +
                std::to_string(res->body.size()) + " bytes)");
            if (res->status == 401 || res->status == 403)
                throw Error(ErrorCode::auth_error,
                            "authentication rejected (HTTP " +
                                std::to_string(res->status) + ")");
            if (res->status == 429 || res->status >= 500) {
                if (attempts > config_.max_retries) {
                    if (res->status == 429)
                        throw Error(ErrorCode::rate_limit_exhausted,
                                    "still rate limited after " +
                                        std::to_string(attempts) + " attempts");
                    throw Error(ErrorCode::api_error,
                                "server error HTTP " + std::to_string(res->status) +
                                    " after " + std::to_string(attempts) + " attempts");
                }
                backoff(attempts);
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw Error(ErrorCode::api_error,
                            "unexpected HTTP status " + std::to_string(res->status));
            return CompletionResult{extract_message(res->body), prompt.chunk_ref,
                                    attempts, CompletionBackend::live};
        }
    }

    // Timestamps of every outbound HTTP request (including retries), in the
    // injected clock's frame. Used by the rate-limit contract tests.
    std::vector<std::chrono::steady_clock::time_point> request_times() const {
        std::lock_guard lk(log_mutex_);
        return request_times_;
    }

    const LlmConfig& config() const { return config_; }

private:
    void log(std::string_view line) const {
        if (hooks_.log) hooks_.log(redact_secret(line, config_.api_key));
    }

    void backoff(int attempt) {
        // exponential with jitter in [0, base); delays are nondecreasing
        // across the retry sequence
        std::uniform_real_distribution<double> jitter(0.0, 1.0);
        double factor;
        {
            std::lock_guard lk(log_mutex_);
            factor = jitter(jitter_rng_);
        }
        const auto base = hooks_.backoff_base.count();
        const auto delay = std::chrono::milliseconds(
            static_cast<int64_t>(base * (1 << (attempt - 1)) + base * factor));
        log("retrying in " + std::to_string(delay.count()) + " ms");
        hooks_.sleep(delay);
    }

    static std::string extract_message(const std::string& body) {
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::malformed_response, "response is not valid JSON");
        }
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty())
            throw Error(ErrorCode::malformed_response, "response has no choices");
        const auto& message = parsed["choices"][0];
        if (!message.contains("message") || !message["message"].contains("content") ||
            !message["message"]["content"].is_string())
            throw Error(ErrorCode::malformed_response,
                        "response has no assistant message content");
        return message["message"]["content"].get<std::string>();
    }

    LlmConfig config_;
    LlmHooks hooks_;
    RateLimiter limiter_;
    std::mt19937 jitter_rng_;
    mutable std::mutex log_mutex_;
    std::vector<std::chrono::steady_clock::time_point> request_times_;
};

// Directory of recorded responses for offline, deterministic runs. Records
// are JSON files {prompt_sha256, chunk_ref, response_text}; lookup prefers an
// exact prompt hash and falls back to the chunk reference.
class FixtureStore {
public:
    explicit FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!std::filesystem::is_directory(dir_))
            throw Error(ErrorCode::fixture_missing,
                        "fixture directory not found: " + dir_.string());
        load();
    }

    CompletionResult replay_completion(const PromptText& prompt) const {
        const std::string hash = sha256_hex(prompt.text);
        if (auto it = by_hash_.find(hash); it != by_hash_.end())
            return CompletionResult{it->second, prompt.chunk_ref, 1,
                                    CompletionBackend::replay};
        const std::string key = ref_key(prompt.chunk_ref);
        if (auto it = by_ref_.find(key); it != by_ref_.end())
            return CompletionResult{it->second, prompt.chunk_ref, 1,
                                    CompletionBackend::replay};
        throw Error(ErrorCode::fixture_missing,
                    "no recorded response for chunk " + key + " (hash " + hash + ")");
    }

    // Writes a new record; used when capturing fixtures from a live run.
    void record(const PromptText& prompt, const std::string& response_text) {
        const std::string hash = sha256_hex(prompt.text);
        const nlohmann::json j = {
            {"prompt_sha256", hash},
            {"chunk_ref", {{"document_id", prompt.chunk_ref.document_id},
                           {"chunk_index", prompt.chunk_ref.chunk_index}}},
            {"response_text", response_text},
        };
        const auto path = dir_ / (hash.substr(0, 16) + ".json");
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw Error(ErrorCode::io_error, "cannot write fixture: " + path.string());
        os << j.dump(2) << '\n';
        by_hash_[hash] = response_text;
        by_ref_[ref_key(prompt.chunk_ref)] = response_text;
    }

private:
    static std::string ref_key(const ChunkRef& ref) {
        return ref.document_id + "#" + std::to_string(ref.chunk_index);
    }

    void load() {
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".json")
                continue;
            std::ifstream is(entry.path(), std::ios::binary);
            nlohmann::json j;
            try {
                is >> j;
            } catch (const nlohmann::json::exception&) {
                continue;  // not a fixture record
            }
            if (!j.contains("response_text")) continue;
            const std::string text = j["response_text"].get<std::string>();
            if (j.contains("prompt_sha256"))
                by_hash_[j["prompt_sha256"].get<std::string>()] = text;
            if (j.contains("chunk_ref")) {
                const auto& ref = j["chunk_ref"];
                by_ref_[ref["document_id"].get<std::string>() + "#" +
                        std::to_string(ref["chunk_index"].get<int>())] = text;
            }
        }
    }

    std::filesystem::path dir_;
    std::unordered_map<std::string, std::string> by_hash_;
    std::unordered_map<std::string, std::string> by_ref_;
};

} // namespace arete
