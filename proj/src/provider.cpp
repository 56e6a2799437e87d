#include "simfid/provider.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace simfid {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw Error("sha256: cannot allocate digest context");
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("sha256: digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string cache_key(const GenerationRequest& request) {
    if (request.prompt.empty()) throw Error("cache_key: empty prompt");
    json canonical;
    canonical["prompt"] = request.prompt;
    canonical["model_name"] = request.model_name;
    canonical["temperature"] = request.temperature;
    canonical["max_output_tokens"] = request.max_output_tokens;
    return sha256_hex(canonical.dump());
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.retry_limit < 0) throw Error("retry_limit must be >= 0");
}

std::string HttpProvider::generate(const GenerationRequest& request) {
    if (request.prompt.empty()) throw Error("generate: empty prompt");
    httplib::Client client(config_.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr)
            throw Error("environment variable not set: " + config_.api_key_env);
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const WireProfile& wire = config_.wire;
    json body;
    body[wire.model_field] = request.model_name.empty() ? config_.model_name : request.model_name;
    body[wire.temperature_field] = request.temperature;
    body[wire.max_tokens_field] = request.max_output_tokens;
    body[wire.messages_field] = json::array({json{{"role", wire.role_value},
                                                  {"content", request.prompt}}});

    auto res = client.Post(wire.chat_path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("transport failure: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw BackendError(res->status,
                           "backend returned status " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw BackendError(res->status, "backend reply is not JSON");
    const json::json_pointer ptr(wire.response_text_pointer);
    if (!reply.contains(ptr) || !reply.at(ptr).is_string())
        throw BackendError(res->status,
                           "backend reply missing text at " + wire.response_text_pointer);
    return reply.at(ptr).get<std::string>();
}

StubProvider::StubProvider(std::string default_reply) : default_reply_(std::move(default_reply)) {}

StubProvider& StubProvider::push_reply(std::string text) {
    script_.push_back({false, std::move(text)});
    return *this;
}

StubProvider& StubProvider::push_failure(std::string message) {
    script_.push_back({true, std::move(message)});
    return *this;
}

std::string StubProvider::generate(const GenerationRequest& request) {
    if (request.prompt.empty()) throw Error("generate: empty prompt");
    std::lock_guard lock(mutex_);
    calls_.fetch_add(1);
    if (next_ < script_.size()) {
        const Step& step = script_[next_++];
        if (step.fail) throw TransportError(step.text);
        return step.text;
    }
    return default_reply_;
}

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::optional<std::string> DiskCache::get(const std::string& key) const {
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.contains("text") || !doc["text"].is_string())
        return std::nullopt;
    hits_.fetch_add(1);
    return doc["text"].get<std::string>();
}

void DiskCache::put(const std::string& key, const std::string& text,
                    const std::string& model_name) {
    std::lock_guard lock(mutex_);
    json doc;
    doc["text"] = text;
    doc["model_name"] = model_name;
    doc["created_unix"] = static_cast<std::int64_t>(std::time(nullptr));
    const auto tmp = dir_ / (key + ".tmp");
    const auto path = dir_ / (key + ".json");
    std::ofstream out(tmp);
    if (!out) throw Error("cache write failed: " + tmp.string());
    out << doc.dump(2) << '\n';
    out.close();
    std::filesystem::rename(tmp, path);
}

std::string RetryingProvider::generate(const GenerationRequest& request) {
    return generate_with_retries(inner_, request, retry_limit_, backoff_base_);
}

std::string CachingProvider::generate(const GenerationRequest& request) {
    const std::string key = cache_key(request);
    if (auto hit = cache_.get(key)) return *hit;
    std::string text = inner_.generate(request);
    cache_.put(key, text, request.model_name);
    return text;
}

std::string generate_with_retries(TextProvider& provider, const GenerationRequest& request,
                                  int retry_limit, std::chrono::milliseconds backoff_base) {
    if (retry_limit < 0) throw Error("retry_limit must be >= 0");
    std::chrono::milliseconds backoff = backoff_base;
    for (int attempt = 0;; ++attempt) {
        try {
            return provider.generate(request);
        } catch (const BackendError& e) {
            if (e.status() < 500 || attempt >= retry_limit) throw;
        } catch (const TransportError&) {
            if (attempt >= retry_limit) throw;
        }
        if (backoff.count() > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

} // namespace simfid
