#pragma once

#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "trifuse/error.hpp"
#include "trifuse/structurer.hpp"
#include "trifuse/vector_store.hpp"

namespace trifuse {

/// Connection settings for an HTTP provider. The api_key, when non-empty,
/// is sent as a bearer token.
struct ProviderConfig {
    std::string endpoint;
    std::string api_key;
    int timeout_sec = 10;
};

namespace detail {

/// Splits "http://host:port/some/path" into client base and request path.
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    std::string url = endpoint;
    if (url.find("://") == std::string::npos) url = "http://" + url;
    const std::size_t scheme_end = url.find("://") + 3;
    const std::size_t path_start = url.find('/', scheme_end);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline nlohmann::json post_provider_json(const ProviderConfig& cfg, const nlohmann::json& body,
                                         const std::string& what) {
    const auto [base, path] = split_endpoint(cfg.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(cfg.timeout_sec, 0);
    client.set_read_timeout(cfg.timeout_sec, 0);
    client.set_write_timeout(cfg.timeout_sec, 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
    const auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw Error(ErrorCode::ProviderUnavailable,
                    what + " endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw Error(ErrorCode::ProviderUnavailable,
                    what + " endpoint returned HTTP " + std::to_string(res->status));
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::MalformedResponse, what + " response is not JSON: " + e.what());
    }
    return parsed;
}

}  // namespace detail

/// Remote embedding provider. POST {"input": text} -> {"embedding": [...]};
/// vectors are L2-normalized locally and checked against the expected
/// dimension.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(ProviderConfig cfg, std::size_t expected_dim = 0)
        : cfg_(std::move(cfg)), dim_(expected_dim) {}

    Embedding embed(const std::string& text) override {
        const nlohmann::json reply =
            detail::post_provider_json(cfg_, nlohmann::json{{"input", text}}, "embedding");
        if (!reply.is_object() || !reply.contains("embedding") || !reply["embedding"].is_array())
            throw Error(ErrorCode::MalformedResponse, "embedding response lacks an \"embedding\" array");
        Embedding e;
        e.v.reserve(reply["embedding"].size());
        for (const auto& x : reply["embedding"]) {
            if (!x.is_number())
                throw Error(ErrorCode::MalformedResponse, "embedding array contains a non-number");
            e.v.push_back(x.get<double>());
            if (!std::isfinite(e.v.back()))
                throw Error(ErrorCode::MalformedResponse, "embedding array contains a non-finite value");
        }
        if (dim_ != 0 && e.dim() != dim_)
            throw Error(ErrorCode::DimMismatch, "provider returned dim " + std::to_string(e.dim()) +
                                                    ", expected " + std::to_string(dim_));
        if (dim_ == 0) dim_ = e.dim();
        try {
            return l2_normalized(std::move(e));
        } catch (const Error&) {
            throw Error(ErrorCode::MalformedResponse, "provider returned a zero vector");
        }
    }

    std::size_t dim() const override { return dim_; }
    bool deterministic() const override { return false; }

private:
    ProviderConfig cfg_;
    std::size_t dim_;
};

/// Remote LLM completion client. Default protocol POST {"prompt": "..."}
/// -> {"text": "..."}; chat_format switches the request body to a
/// single-message chat shape.
class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(ProviderConfig cfg, bool chat_format = false)
        : cfg_(std::move(cfg)), chat_format_(chat_format) {}

    std::string complete(const std::string& prompt) override {
        nlohmann::json body;
        if (chat_format_)
            body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
        else
            body["prompt"] = prompt;
        const nlohmann::json reply = detail::post_provider_json(cfg_, body, "llm");
        if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string())
            throw Error(ErrorCode::MalformedResponse, "llm response lacks a \"text\" string");
        return reply["text"].get<std::string>();
    }

private:
    ProviderConfig cfg_;
    bool chat_format_;
};

}  // namespace trifuse
