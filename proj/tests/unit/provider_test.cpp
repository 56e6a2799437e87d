#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "simfid/provider.hpp"
#include "support/temp.hpp"

using namespace simfid;
using testsupport::TempDir;

TEST_CASE("cache_key is a content hash of the full request") {
    const GenerationRequest base{"hello world", "m1", 0.7, 256};
    CHECK(cache_key(base) == cache_key(base));

    GenerationRequest temp = base;
    temp.temperature = 0.0;
    CHECK(cache_key(temp) != cache_key(base));

    GenerationRequest spaced = base;
    spaced.prompt = "hello  world";
    CHECK(cache_key(spaced) != cache_key(base));

    GenerationRequest model = base;
    model.model_name = "m2";
    CHECK(cache_key(model) != cache_key(base));

    GenerationRequest tokens = base;
    tokens.max_output_tokens = 512;
    CHECK(cache_key(tokens) != cache_key(base));

    CHECK_THROWS_AS(cache_key(GenerationRequest{"", "m", 0.7, 1}), Error);
}

TEST_CASE("stub provider replays its script deterministically") {
    StubProvider stub("OK");
    const GenerationRequest req{"prompt", "m", 0.7, 10};
    CHECK(stub.generate(req) == "OK");

    StubProvider scripted("fallback");
    scripted.push_reply("one").push_reply("two");
    CHECK(scripted.generate(req) == "one");
    CHECK(scripted.generate(req) == "two");
    CHECK(scripted.generate(req) == "fallback");
    CHECK(scripted.call_count() == 3);
}

TEST_CASE("retries recover from transient transport failures") {
    StubProvider stub("unused");
    stub.push_failure("boom").push_failure("boom again").push_reply("recovered");
    const GenerationRequest req{"p", "m", 0.7, 10};
    const std::string out = generate_with_retries(stub, req, 3, std::chrono::milliseconds(0));
    CHECK(out == "recovered");
    CHECK(stub.call_count() == 3);
}

TEST_CASE("exhausted retries surface the transport error") {
    StubProvider stub("unused");
    stub.push_failure("a").push_failure("b").push_failure("c");
    const GenerationRequest req{"p", "m", 0.7, 10};
    CHECK_THROWS_AS(generate_with_retries(stub, req, 2, std::chrono::milliseconds(0)),
                    TransportError);
    CHECK(stub.call_count() == 3);
}

TEST_CASE("4xx backend errors are not retried") {
    CallbackProvider provider([](const GenerationRequest&) -> std::string {
        throw BackendError(404, "not found");
    });
    const GenerationRequest req{"p", "m", 0.7, 10};
    CHECK_THROWS_AS(generate_with_retries(provider, req, 3, std::chrono::milliseconds(0)),
                    BackendError);
    CHECK(provider.call_count() == 1);
}

TEST_CASE("5xx backend errors are retried") {
    int failures = 2;
    CallbackProvider provider([&failures](const GenerationRequest&) -> std::string {
        if (failures-- > 0) throw BackendError(503, "unavailable");
        return "ok";
    });
    const GenerationRequest req{"p", "m", 0.7, 10};
    CHECK(generate_with_retries(provider, req, 3, std::chrono::milliseconds(0)) == "ok");
}

TEST_CASE("caching provider serves repeats without backend calls") {
    TempDir dir;
    DiskCache cache(dir.path());
    StubProvider stub("generated");
    CachingProvider caching(stub, cache);
    const GenerationRequest req{"cache me", "m", 0.7, 10};

    CHECK(caching.generate(req) == "generated");
    CHECK(stub.call_count() == 1);
    CHECK(caching.generate(req) == "generated");
    CHECK(stub.call_count() == 1);
    CHECK(cache.hits() == 1);

    // entries persist across provider instances
    DiskCache cache2(dir.path());
    StubProvider stub2("different");
    CachingProvider caching2(stub2, cache2);
    CHECK(caching2.generate(req) == "generated");
    CHECK(stub2.call_count() == 0);

    // a different request misses
    GenerationRequest other = req;
    other.prompt = "something else";
    CHECK(caching.generate(other) == "generated");
    CHECK(stub.call_count() == 2);
}

TEST_CASE("http provider speaks a minimal chat-completion protocol") {
    httplib::Server server;
    std::string seen_body;
    std::string seen_auth;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    seen_body = req.body;
                    seen_auth = req.get_header_value("Authorization");
                    nlohmann::json reply = {
                        {"choices",
                         nlohmann::json::array(
                             {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}})}};
                    res.set_content(reply.dump(), "application/json");
                });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("oops", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("SIMFID_TEST_KEY", "sekret", 1);
    ProviderConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port);
    config.api_key_env = "SIMFID_TEST_KEY";
    config.model_name = "default-model";
    HttpProvider provider(config);

    const GenerationRequest req{"ping", "test-model", 0.25, 64};
    CHECK(provider.generate(req) == "pong");
    const nlohmann::json body = nlohmann::json::parse(seen_body);
    CHECK(body["model"] == "test-model");
    CHECK(body["temperature"] == doctest::Approx(0.25));
    CHECK(body["max_tokens"] == 64);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "ping");
    CHECK(seen_auth == "Bearer sekret");

    ProviderConfig broken = config;
    broken.wire.chat_path = "/broken";
    HttpProvider bad(broken);
    CHECK_THROWS_AS(bad.generate(req), BackendError);

    server.stop();
    thread.join();
}

TEST_CASE("http provider fails fast when the key variable is missing") {
    ProviderConfig config;
    config.endpoint = "http://127.0.0.1:1";
    config.api_key_env = "SIMFID_DEFINITELY_UNSET_ENV";
    HttpProvider provider(config);
    CHECK_THROWS_AS(provider.generate(GenerationRequest{"p", "m", 0.7, 1}), Error);
}
