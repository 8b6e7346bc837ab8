#include "chemrag/gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "chemrag/util.hpp"

namespace chemrag {

namespace {

using nlohmann::json;

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

std::vector<ModelProfile> builtin_profiles() {
    auto chat = [](std::string name, double temperature, size_t max_tokens, bool reasoning) {
        ModelProfile p;
        p.name = std::move(name);
        p.kind = ModelKind::chat;
        p.temperature = temperature;
        p.max_tokens = max_tokens;
        p.reasoning = reasoning;
        return p;
    };
    auto embedding = [](std::string name, size_t dim, bool stub) {
        ModelProfile p;
        p.name = std::move(name);
        p.kind = ModelKind::embedding;
        p.dim = dim;
        p.stub = stub;
        return p;
    };
    std::vector<ModelProfile> profiles = {
        chat("gpt-3.5-turbo", 0.0, 512, false),
        chat("gpt-4o", 0.0, 512, false),
        chat("llama-3.1-8b-instruct", 0.0, 512, false),
        chat("llama-3.1-70b-instruct", 0.0, 512, false),
        chat("mistral-7b-instruct-v0.2", 0.0, 512, false),
        chat("chemllm-7b", 0.0, 512, false),
        chat("deepseek-r1-llama-8b", 0.6, 10000, true),
        chat("o1", 1.0, 10000, true),
        embedding("contriever", 0, false),
        embedding("specter", 0, false),
        embedding("e5", 0, false),
        embedding("hash32", 32, true),
    };
    ModelProfile echo = chat("echo", 0.0, 512, false);
    echo.stub = true;
    profiles.push_back(std::move(echo));
    return profiles;
}

std::string chat_cache_key(const ModelProfile& profile, const std::vector<Message>& messages,
                           int round, json* fingerprint_out) {
    json fp;
    fp["model"] = profile.name;
    fp["temperature"] = profile.temperature;
    fp["max_tokens"] = profile.max_tokens;
    json msgs = json::array();
    for (const Message& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    fp["messages"] = msgs;
    if (round > 0) fp["round"] = round;
    if (fingerprint_out) *fingerprint_out = fp;
    return sha256_hex(fp.dump());
}

std::string embed_cache_key(const ModelProfile& profile, const std::string& text) {
    return sha256_hex(profile.name + '\x1f' + text);
}

}  // namespace

void ModelProfile::validate() const {
    if (name.empty()) throw ConfigError("model profile needs a name");
    if (temperature < 0.0) throw ConfigError("profile " + name + ": temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("profile " + name + ": max_tokens must be >= 1");
    if (kind == ModelKind::chat && reasoning) {
        if (max_tokens != 10000)
            throw ConfigError("profile " + name + ": reasoning profiles use max_tokens 10000");
        if (temperature != 0.6 && temperature != 1.0)
            throw ConfigError("profile " + name + ": reasoning temperature must be 0.6 or 1");
    }
}

ModelProfile ModelProfile::from_json(const json& j) {
    ModelProfile p;
    p.name = j.at("name").get<std::string>();
    std::string kind = j.value("kind", "chat");
    if (kind == "chat")
        p.kind = ModelKind::chat;
    else if (kind == "embedding")
        p.kind = ModelKind::embedding;
    else
        throw ConfigError("profile " + p.name + ": unknown kind '" + kind + "'");
    p.endpoint = j.value("endpoint", "");
    p.reasoning = j.value("reasoning", false);
    p.temperature = j.value("temperature", p.reasoning ? 0.6 : 0.0);
    p.max_tokens = j.value("max_tokens", p.reasoning ? size_t{10000} : size_t{512});
    p.dim = j.value("dim", size_t{0});
    p.api_model = j.value("api_model", "");
    p.stub = j.value("stub", false);
    p.validate();
    return p;
}

GatewayConfig gateway_config_from_json(const json& j) {
    GatewayConfig cfg;
    if (j.contains("cache_dir")) cfg.cache_dir = j["cache_dir"].get<std::string>();
    cfg.api_base = j.value("api_base", "");
    cfg.api_key = j.value("api_key", "");
    cfg.requests_per_minute = j.value("requests_per_minute", 0u);
    if (j.contains("profiles"))
        for (const auto& row : j["profiles"]) cfg.profiles.push_back(ModelProfile::from_json(row));
    return cfg;
}

std::optional<json> ResponseCache::get(const std::string& category,
                                       const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::filesystem::path path = root_ / category / key.substr(0, 2) / (key + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    return json::parse(read_file(path));
}

void ResponseCache::put(const std::string& category, const std::string& key, const json& value) {
    if (!enabled()) return;
    std::filesystem::path path = root_ / category / key.substr(0, 2) / (key + ".json");
    atomic_write_file(path, value.dump());
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)), cache_(config_.cache_dir) {
    if (config_.api_base.empty()) config_.api_base = env_or_empty("CHEMRAG_API_BASE");
    if (config_.api_key.empty()) config_.api_key = env_or_empty("CHEMRAG_API_KEY");
    for (ModelProfile& p : builtin_profiles()) profiles_[p.name] = std::move(p);
    for (const ModelProfile& p : config_.profiles) {
        p.validate();
        profiles_[p.name] = p;
    }
}

void Gateway::register_profile(ModelProfile profile) {
    profile.validate();
    profiles_[profile.name] = std::move(profile);
}

const ModelProfile& Gateway::profile(const std::string& name) const {
    auto it = profiles_.find(name);
    if (it == profiles_.end()) throw ConfigError("unknown model profile: " + name);
    return it->second;
}

std::vector<std::string> Gateway::profile_names() const {
    std::vector<std::string> names;
    for (const auto& [name, p] : profiles_) names.push_back(name);
    return names;
}

double Gateway::temperature_for(const std::string& model_name) const {
    return profile(model_name).temperature;
}

std::string Gateway::resolve_endpoint(const ModelProfile& profile) const {
    if (!profile.endpoint.empty()) return profile.endpoint;
    if (!config_.api_base.empty()) return config_.api_base;
    throw ConfigError("no endpoint for profile " + profile.name +
                      " (set CHEMRAG_API_BASE or profile.endpoint)");
}

void Gateway::rate_limit_acquire(const std::string& endpoint) {
    if (config_.requests_per_minute == 0) return;
    std::unique_lock lock(rate_mu_);
    Bucket& bucket = rate_buckets_[endpoint];
    if (bucket.last == std::chrono::steady_clock::time_point{}) {
        bucket.last = std::chrono::steady_clock::now();
        bucket.tokens = 1.0; // no cold burst against a fresh endpoint
    }
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - bucket.last).count();
        bucket.last = now;
        bucket.tokens = std::min<double>(
            config_.requests_per_minute,
            bucket.tokens + elapsed * config_.requests_per_minute / 60.0);
        if (bucket.tokens >= 1.0) {
            bucket.tokens -= 1.0;
            return;
        }
        double wait = (1.0 - bucket.tokens) * 60.0 / config_.requests_per_minute;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

std::string Gateway::http_post_json(const std::string& endpoint, const std::string& path,
                                    const json& body) {
    // split "scheme://host:port/prefix" into client base and path prefix
    std::string base = endpoint;
    std::string prefix;
    size_t scheme = endpoint.find("://");
    if (scheme != std::string::npos) {
        size_t slash = endpoint.find('/', scheme + 3);
        if (slash != std::string::npos) {
            base = endpoint.substr(0, slash);
            prefix = endpoint.substr(slash);
            if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    std::string payload = body.dump();
    std::string last_error;
    for (size_t attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(config_.initial_backoff * (1u << (attempt - 1)));
        rate_limit_acquire(endpoint);
        httplib::Client client(base);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(300, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        network_requests_.fetch_add(1);
        auto res = client.Post(prefix + path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (res->status >= 400 && res->status < 500)
            throw ConfigError("endpoint returned " + std::to_string(res->status) + ": " +
                              res->body.substr(0, 512));
        last_error = "endpoint returned " + std::to_string(res->status);
    }
    throw TransportError("request to " + base + path + " failed after " +
                         std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

std::string Gateway::run_deduped(const std::string& key, const std::function<std::string()>& fn) {
    std::shared_future<std::string> future;
    std::shared_ptr<std::promise<std::string>> owned;
    {
        std::lock_guard lock(inflight_mu_);
        auto it = inflight_.find(key);
        if (it != inflight_.end()) {
            future = it->second;
        } else {
            owned = std::make_shared<std::promise<std::string>>();
            future = owned->get_future().share();
            inflight_.emplace(key, future);
        }
    }
    if (!owned) return future.get();
    try {
        owned->set_value(fn());
    } catch (...) {
        owned->set_exception(std::current_exception());
    }
    {
        std::lock_guard lock(inflight_mu_);
        inflight_.erase(key);
    }
    return future.get();
}

std::string Gateway::chat_complete(const ModelProfile& profile,
                                   const std::vector<Message>& messages, int round) {
    if (profile.kind != ModelKind::chat)
        throw ConfigError("profile " + profile.name + " is not a chat profile");
    bool has_user = std::any_of(messages.begin(), messages.end(),
                                [](const Message& m) { return m.role == "user"; });
    if (!has_user) throw ValidationError("chat needs at least one user message");

    json fingerprint;
    std::string key = chat_cache_key(profile, messages, round, &fingerprint);
    if (auto hit = cache_.get("chat", key)) return hit->at("response").get<std::string>();

    return run_deduped(key, [&]() -> std::string {
        std::string response;
        if (profile.stub) {
            // echo stub: last user message verbatim, no network
            for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
                if (it->role == "user") {
                    response = it->content;
                    break;
                }
            }
        } else {
            json body;
            body["model"] = profile.api_model.empty() ? profile.name : profile.api_model;
            json msgs = json::array();
            for (const Message& m : messages)
                msgs.push_back({{"role", m.role}, {"content", m.content}});
            body["messages"] = msgs;
            body["temperature"] = profile.temperature;
            body["max_tokens"] = profile.max_tokens;
            json reply = json::parse(http_post_json(resolve_endpoint(profile),
                                                    "/v1/chat/completions", body));
            try {
                response = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception&) {
                throw IntegrityError("malformed chat response for profile " + profile.name);
            }
        }
        cache_.put("chat", key, json{{"fingerprint", fingerprint}, {"response", response}});
        return response;
    });
}

std::vector<double> Gateway::hash32_embed(const std::string& text) {
    std::vector<std::string> tokens = split_whitespace(text);
    std::vector<uint64_t> hashes;
    hashes.reserve(tokens.size());
    for (const std::string& t : tokens) hashes.push_back(hash64(t));
    std::sort(hashes.begin(), hashes.end()); // token-order invariance

    std::vector<double> v(32, 0.0);
    for (uint64_t h : hashes) {
        for (int i = 0; i < 32; ++i) {
            uint64_t x = mix64(h + static_cast<uint64_t>(i) * 0x9e3779b97f4a7c15ULL);
            v[i] += static_cast<double>(x >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        }
    }
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    double norm = std::sqrt(norm_sq);
    if (!(norm > 1e-12)) throw IntegrityError("hash32 produced a degenerate embedding");
    for (double& x : v) x /= norm;
    return v;
}

std::vector<std::vector<double>> Gateway::embed(const ModelProfile& profile,
                                                const std::vector<std::string>& texts) {
    if (profile.kind != ModelKind::embedding)
        throw ConfigError("profile " + profile.name + " is not an embedding profile");
    if (texts.empty()) throw ValidationError("embed needs at least one text");
    for (const std::string& t : texts)
        if (trim(t).empty()) throw ValidationError("cannot embed an empty string");

    std::vector<std::vector<double>> out(texts.size());

    if (profile.stub) {
        for (size_t i = 0; i < texts.size(); ++i) out[i] = hash32_embed(texts[i]);
        return out;
    }

    size_t expected_dim = profile.dim;
    std::vector<size_t> misses;
    for (size_t i = 0; i < texts.size(); ++i) {
        if (auto hit = cache_.get("embed", embed_cache_key(profile, texts[i]))) {
            out[i] = hit->at("embedding").get<std::vector<double>>();
            if (expected_dim == 0) expected_dim = out[i].size();
            if (out[i].size() != expected_dim)
                throw IntegrityError("cached embedding dimension drift for profile " +
                                     profile.name);
        } else {
            misses.push_back(i);
        }
    }

    constexpr size_t kBatch = 64;
    for (size_t start = 0; start < misses.size(); start += kBatch) {
        size_t end = std::min(misses.size(), start + kBatch);
        json body;
        body["model"] = profile.api_model.empty() ? profile.name : profile.api_model;
        json input = json::array();
        for (size_t i = start; i < end; ++i) input.push_back(texts[misses[i]]);
        body["input"] = input;
        json reply =
            json::parse(http_post_json(resolve_endpoint(profile), "/v1/embeddings", body));
        if (!reply.contains("data") || !reply["data"].is_array() ||
            reply["data"].size() != end - start)
            throw IntegrityError("malformed embeddings response for profile " + profile.name);
        for (size_t i = start; i < end; ++i) {
            const json& row = reply["data"][i - start];
            std::vector<double> vec = row.at("embedding").get<std::vector<double>>();
            if (expected_dim == 0) expected_dim = vec.size();
            if (vec.size() != expected_dim)
                throw IntegrityError("embedding dimension drift in batch for profile " +
                                     profile.name);
            cache_.put("embed", embed_cache_key(profile, texts[misses[i]]),
                       json{{"fingerprint", {{"model", profile.name}, {"text", texts[misses[i]]}}},
                            {"embedding", vec}});
            out[misses[i]] = std::move(vec);
        }
    }
    return out;
}

namespace {

class GatewayEmbedder : public Embedder {
public:
    GatewayEmbedder(Gateway& gateway, std::string profile_name)
        : gateway_(gateway), name_(std::move(profile_name)) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        return gateway_.embed(gateway_.profile(name_), texts);
    }

    std::string profile() const override { return name_; }

private:
    Gateway& gateway_;
    std::string name_;
};

}  // namespace

std::unique_ptr<Embedder> Gateway::embedder_for(const std::string& profile_name) {
    const ModelProfile& p = profile(profile_name);
    if (p.kind != ModelKind::embedding)
        throw ConfigError("profile " + profile_name + " is not an embedding profile");
    return std::make_unique<GatewayEmbedder>(*this, profile_name);
}

}  // namespace chemrag
