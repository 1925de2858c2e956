#include "core/providers.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <thread>

#include "httplib.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace quiet {

Mode parse_mode(const std::string& s) {
    if (s == "live") return Mode::live;
    if (s == "replay") return Mode::replay;
    if (s == "record") return Mode::record;
    throw UsageError("unknown mode '" + s + "' (expected live|replay|record)");
}

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::live: return "live";
        case Mode::replay: return "replay";
        case Mode::record: return "record";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// HTTP transport (OpenAI-compatible chat / embedding endpoints)

namespace {

class HttpTransport : public Transport {
public:
    std::string post(const ProviderConfig& cfg, const std::string& path,
                     const std::string& body) override {
        httplib::Client client(cfg.endpoint);
        client.set_connection_timeout(int(cfg.timeout_s), 0);
        client.set_read_timeout(int(cfg.timeout_s), 0);
        httplib::Headers headers;
        const char* key = cfg.auth_env.empty() ? nullptr : std::getenv(cfg.auth_env.c_str());
        if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res)
            throw TransportError("transport failure for provider " + cfg.name + ": " +
                                 httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw TransportError("provider " + cfg.name + " returned HTTP " +
                                 std::to_string(res->status));
        return res->body;
    }
};

std::string now_iso8601() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json canonical_chat_request(const ProviderConfig& cfg, const std::string& prompt) {
    // Volatile fields (timestamps, request ids) are never part of the
    // canonical form; nlohmann objects serialize with sorted keys.
    return json{{"kind", "chat"},
                {"provider", cfg.name},
                {"model", cfg.model},
                {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
}

json canonical_embed_request(const ProviderConfig& cfg, const std::string& text) {
    return json{{"kind", "embedding"},
                {"provider", cfg.name},
                {"model", cfg.model},
                {"input", text}};
}

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

// ---------------------------------------------------------------------------
// ProviderClient

ProviderClient::ProviderClient(std::string cache_dir, Mode mode,
                               std::shared_ptr<Transport> transport)
    : cache_dir_(std::move(cache_dir)), mode_(mode), transport_(std::move(transport)) {
    // Concurrent calls share the transport; set it up before any fan-out.
    if (mode_ != Mode::replay && !transport_) transport_ = make_http_transport();
}

std::string ProviderClient::chat_cache_key(const ProviderConfig& cfg, const std::string& prompt) {
    return sha256_hex(canonical_chat_request(cfg, prompt).dump());
}

std::string ProviderClient::embed_cache_key(const ProviderConfig& cfg, const std::string& text) {
    return sha256_hex(canonical_embed_request(cfg, text).dump());
}

std::string ProviderClient::cache_path(const std::string& key) const {
    return (fs::path(cache_dir_) / (key + ".json")).string();
}

bool ProviderClient::cache_lookup(const std::string& key, std::string& value_json) const {
    fs::path p = cache_path(key);
    if (!fs::exists(p)) return false;
    value_json = read_file(p.string());
    return true;
}

void ProviderClient::cache_store(const ProviderConfig& cfg, const std::string& key,
                                 const std::string& request_json,
                                 const std::string& response_json) const {
    json entry{{"provider", cfg.name},
               {"model", cfg.model},
               {"kind", cfg.kind == ProviderKind::chat ? "chat" : "embedding"},
               {"timestamp", now_iso8601()},
               {"decoding", "backend-default"},
               {"request", json::parse(request_json)},
               {"response", json::parse(response_json)}};
    write_file_atomic(cache_path(key), entry.dump(2) + "\n");
}

void ProviderClient::require_credential(const ProviderConfig& cfg) const {
    if (cfg.auth_env.empty()) return;
    const char* v = std::getenv(cfg.auth_env.c_str());
    if (!v || !*v)
        throw ProviderError("missing credential: environment variable " + cfg.auth_env +
                            " is not set (provider " + cfg.name + ")");
}

std::string ProviderClient::transport_call(const ProviderConfig& cfg, const std::string& path,
                                           const std::string& body) {
    if (!transport_) throw ProviderError("no transport available in " + mode_name(mode_) + " mode");
    int attempts = cfg.max_retries + 1;
    for (int attempt = 0;; ++attempt) {
        try {
            return transport_->post(cfg, path, body);
        } catch (const TransportError&) {
            if (attempt + 1 >= attempts) throw;
            // Bounded exponential backoff.
            int delay_ms = std::min(50 << attempt, 500);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        }
    }
}

std::string ProviderClient::chat_complete(const ProviderConfig& cfg, const std::string& prompt) {
    if (cfg.kind != ProviderKind::chat)
        throw UsageError("provider " + cfg.name + " is not a chat provider");
    json canonical = canonical_chat_request(cfg, prompt);
    std::string key = sha256_hex(canonical.dump());

    std::string cached;
    if (mode_ != Mode::live && cache_lookup(key, cached)) {
        json entry = json::parse(cached);
        return entry.at("response").get<std::string>();
    }
    if (mode_ == Mode::replay)
        throw ProviderError("cache miss in replay mode for key " + key + " (provider " +
                            cfg.name + ")");

    require_credential(cfg);
    json wire{{"model", cfg.model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
    std::string body = transport_call(cfg, "/chat/completions", wire.dump());
    std::string text;
    try {
        json res = json::parse(body);
        text = res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError("malformed chat response from " + cfg.name + ": " + e.what());
    }
    if (mode_ == Mode::record) cache_store(cfg, key, canonical.dump(), json(text).dump());
    return text;
}

EmbeddingVector ProviderClient::embed(const ProviderConfig& cfg, const std::string& text) {
    if (cfg.kind != ProviderKind::embedding)
        throw UsageError("provider " + cfg.name + " is not an embedding provider");
    if (text.empty()) throw UsageError("embed requires non-empty text");
    json canonical = canonical_embed_request(cfg, text);
    std::string key = sha256_hex(canonical.dump());

    auto to_vector = [&cfg](const json& arr) {
        EmbeddingVector v;
        v.values = arr.get<std::vector<double>>();
        if (v.values.empty())
            throw ProviderError("empty embedding returned by " + cfg.name);
        double norm2 = 0;
        for (double x : v.values) norm2 += x * x;
        if (std::sqrt(norm2) <= 1e-12)
            throw ProviderError("zero vector returned by " + cfg.name);
        return v;
    };

    std::string cached;
    if (mode_ != Mode::live && cache_lookup(key, cached)) {
        json entry = json::parse(cached);
        return to_vector(entry.at("response"));
    }
    if (mode_ == Mode::replay)
        throw ProviderError("cache miss in replay mode for key " + key + " (provider " +
                            cfg.name + ")");

    require_credential(cfg);
    json wire{{"model", cfg.model}, {"input", text}};
    std::string body = transport_call(cfg, "/embeddings", wire.dump());
    json arr;
    try {
        json res = json::parse(body);
        arr = res.at("data").at(0).at("embedding");
    } catch (const json::exception& e) {
        throw ProviderError("malformed embedding response from " + cfg.name + ": " + e.what());
    }
    EmbeddingVector v = to_vector(arr);
    if (mode_ == Mode::record) cache_store(cfg, key, canonical.dump(), arr.dump());
    return v;
}

}  // namespace quiet
