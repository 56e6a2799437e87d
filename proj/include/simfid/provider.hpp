#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "simfid/common.hpp"

namespace simfid {

struct GenerationRequest {
    std::string prompt; // non-empty
    std::string model_name;
    double temperature = 0.7;
    int max_output_tokens = 1024;
};

// Content hash of (prompt, model_name, temperature, max_output_tokens).
// Equal requests collide; any difference (including whitespace) does not.
std::string cache_key(const GenerationRequest& request);

// SHA-256 hex digest of arbitrary text. Also used for conversation and
// prompt hashes elsewhere.
std::string sha256_hex(std::string_view data);

class TransportError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    BackendError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class TextProvider {
public:
    virtual ~TextProvider() = default;
    // Single attempt; throws TransportError or BackendError on failure.
    virtual std::string generate(const GenerationRequest& request) = 0;
};

// Field mapping for a minimal chat-completion POST carrying one user message.
struct WireProfile {
    std::string chat_path = "/v1/chat/completions";
    std::string model_field = "model";
    std::string temperature_field = "temperature";
    std::string max_tokens_field = "max_tokens";
    std::string messages_field = "messages";
    std::string role_value = "user";
    // JSON pointer to the reply text in the response body.
    std::string response_text_pointer = "/choices/0/message/content";
};

struct ProviderConfig {
    std::string endpoint; // e.g. http://localhost:8089
    std::string api_key_env;
    std::string model_name;
    std::chrono::milliseconds timeout{30000};
    int retry_limit = 2;
    WireProfile wire;
};

class HttpProvider : public TextProvider {
public:
    explicit HttpProvider(ProviderConfig config);
    std::string generate(const GenerationRequest& request) override;

private:
    ProviderConfig config_;
};

// Deterministic scripted provider for tests and offline runs. Steps are
// consumed in order; once exhausted the default reply repeats.
class StubProvider : public TextProvider {
public:
    explicit StubProvider(std::string default_reply = "OK");

    StubProvider& push_reply(std::string text);
    StubProvider& push_failure(std::string message);

    std::string generate(const GenerationRequest& request) override;
    std::size_t call_count() const { return calls_.load(); }

private:
    struct Step {
        bool fail;
        std::string text;
    };
    std::string default_reply_;
    std::vector<Step> script_;
    std::size_t next_ = 0;
    std::atomic<std::size_t> calls_{0};
    std::mutex mutex_;
};

// Stub whose reply depends on a user-supplied function of the request;
// must be deterministic to keep runs reproducible.
class CallbackProvider : public TextProvider {
public:
    using Fn = std::function<std::string(const GenerationRequest&)>;
    explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}
    std::string generate(const GenerationRequest& request) override {
        calls_.fetch_add(1);
        return fn_(request);
    }
    std::size_t call_count() const { return calls_.load(); }

private:
    Fn fn_;
    std::atomic<std::size_t> calls_{0};
};

// Applies generate_with_retries around any provider.
class RetryingProvider : public TextProvider {
public:
    RetryingProvider(TextProvider& inner, int retry_limit,
                     std::chrono::milliseconds backoff_base = std::chrono::milliseconds(100))
        : inner_(inner), retry_limit_(retry_limit), backoff_base_(backoff_base) {}
    std::string generate(const GenerationRequest& request) override;

private:
    TextProvider& inner_;
    int retry_limit_;
    std::chrono::milliseconds backoff_base_;
};

// One file per cache key; value carries the raw backend text plus metadata.
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& text, const std::string& model_name);

    std::size_t hits() const { return hits_.load(); }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_; // serializes writes
    mutable std::atomic<std::size_t> hits_{0};
};

class CachingProvider : public TextProvider {
public:
    CachingProvider(TextProvider& inner, DiskCache& cache) : inner_(inner), cache_(cache) {}
    std::string generate(const GenerationRequest& request) override;

private:
    TextProvider& inner_;
    DiskCache& cache_;
};

// Retries transport errors and 5xx backend errors up to retry_limit times
// with exponential backoff; 4xx backend errors surface immediately.
std::string generate_with_retries(TextProvider& provider, const GenerationRequest& request,
                                  int retry_limit,
                                  std::chrono::milliseconds backoff_base = std::chrono::milliseconds(100));

} // namespace simfid
