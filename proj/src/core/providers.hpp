#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/util.hpp"

namespace quiet {

enum class Mode { live, replay, record };
Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);

enum class ProviderKind { chat, embedding };

struct ProviderConfig {
    std::string name;
    ProviderKind kind = ProviderKind::chat;
    std::string endpoint;
    std::string model;
    std::string auth_env;     // name of the credential environment variable
    double timeout_s = 30.0;
    int max_retries = 2;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::size_t dimension() const { return values.size(); }
};

struct TransportError : ProviderError {
    explicit TransportError(const std::string& m) : ProviderError(m) {}
};

// Wire-level seam. Tests and fixture generation inject stubs; replay mode
// never invokes it.
class Transport {
public:
    virtual ~Transport() = default;
    // POST `body` (JSON) to cfg.endpoint + path, returns the response body.
    virtual std::string post(const ProviderConfig& cfg, const std::string& path,
                             const std::string& body) = 0;
};

std::shared_ptr<Transport> make_http_transport();

// Chat-completion and embedding access with a deterministic record/replay
// cache: one file per canonical-request digest, written atomically.
class ProviderClient {
public:
    ProviderClient(std::string cache_dir, Mode mode,
                   std::shared_ptr<Transport> transport = nullptr);

    std::string chat_complete(const ProviderConfig& cfg, const std::string& prompt);
    EmbeddingVector embed(const ProviderConfig& cfg, const std::string& text);

    // Canonical request digests; stable under JSON field reordering.
    static std::string chat_cache_key(const ProviderConfig& cfg, const std::string& prompt);
    static std::string embed_cache_key(const ProviderConfig& cfg, const std::string& text);

    Mode mode() const { return mode_; }
    const std::string& cache_dir() const { return cache_dir_; }

private:
    std::string cache_path(const std::string& key) const;
    bool cache_lookup(const std::string& key, std::string& value_json) const;
    void cache_store(const ProviderConfig& cfg, const std::string& key,
                     const std::string& request_json, const std::string& response_json) const;
    std::string transport_call(const ProviderConfig& cfg, const std::string& path,
                               const std::string& body);
    void require_credential(const ProviderConfig& cfg) const;

    std::string cache_dir_;
    Mode mode_;
    std::shared_ptr<Transport> transport_;
};

}  // namespace quiet
