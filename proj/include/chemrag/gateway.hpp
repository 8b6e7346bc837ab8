#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemrag/dense_index.hpp"
#include "chemrag/errors.hpp"

namespace chemrag {

enum class ModelKind { chat, embedding };

struct ModelProfile {
    std::string name;
    ModelKind kind = ModelKind::chat;
    std::string endpoint;      // base URL; empty falls back to gateway default
    double temperature = 0.0;
    size_t max_tokens = 512;
    bool reasoning = false;    // reasoning profiles run at 10000 tokens, temp 0.6 or 1
    size_t dim = 0;            // embeddings: expected dimension, 0 = server-defined
    std::string api_model;     // wire model name; defaults to name
    bool stub = false;         // echo / hash32, served without network

    void validate() const;
    static ModelProfile from_json(const nlohmann::json& j);
};

struct Message {
    std::string role; // "system" or "user"
    std::string content;
};

struct GatewayConfig {
    std::filesystem::path cache_dir; // empty disables the response cache
    std::string api_base;            // default endpoint (env CHEMRAG_API_BASE if empty)
    std::string api_key;             // env CHEMRAG_API_KEY if empty
    unsigned requests_per_minute = 0; // 0 = unlimited
    size_t max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    std::vector<ModelProfile> profiles; // overrides/additions to the builtin registry
};

GatewayConfig gateway_config_from_json(const nlohmann::json& j);

// Content-addressed on-disk store of endpoint responses. Values carry the
// request fingerprint for audit; writes go through temp+rename so concurrent
// readers never see partial entries.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}
    bool enabled() const { return !root_.empty(); }
    std::optional<nlohmann::json> get(const std::string& category, const std::string& key) const;
    void put(const std::string& category, const std::string& key, const nlohmann::json& value);

private:
    std::filesystem::path root_;
};

// Client for OpenAI-compatible chat-completion and embedding endpoints with
// per-model profiles, retries, rate limiting, in-flight request
// deduplication, and the response cache that makes runs replayable.
class Gateway {
public:
    explicit Gateway(GatewayConfig config);

    void register_profile(ModelProfile profile);
    const ModelProfile& profile(const std::string& name) const;
    std::vector<std::string> profile_names() const;

    // Appendix-B temperatures: reasoning models keep their 0.6 / 1 settings,
    // everything else runs at 0.
    double temperature_for(const std::string& model_name) const;

    // `round` distinguishes repeated sampling rounds of reasoning models in
    // the cache key; round 0 is the plain request.
    std::string chat_complete(const ModelProfile& profile, const std::vector<Message>& messages,
                              int round = 0);

    std::vector<std::vector<double>> embed(const ModelProfile& profile,
                                           const std::vector<std::string>& texts);

    std::unique_ptr<Embedder> embedder_for(const std::string& profile_name);

    size_t network_requests() const { return network_requests_.load(); }

    // Deterministic test embedder: seeded hash of the token multiset,
    // L2-normalized, 32 dimensions.
    static std::vector<double> hash32_embed(const std::string& text);

private:
    std::string http_post_json(const std::string& endpoint, const std::string& path,
                               const nlohmann::json& body);
    std::string resolve_endpoint(const ModelProfile& profile) const;
    std::string run_deduped(const std::string& key, const std::function<std::string()>& fn);
    void rate_limit_acquire(const std::string& endpoint);

    GatewayConfig config_;
    std::map<std::string, ModelProfile> profiles_;
    ResponseCache cache_;
    std::atomic<size_t> network_requests_{0};

    std::mutex inflight_mu_;
    std::unordered_map<std::string, std::shared_future<std::string>> inflight_;

    struct Bucket {
        double tokens = 0.0;
        std::chrono::steady_clock::time_point last{};
    };
    std::mutex rate_mu_;
    std::map<std::string, Bucket> rate_buckets_; // one token bucket per endpoint
};

}  // namespace chemrag
