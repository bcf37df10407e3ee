#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "trifuse/engine.hpp"
#include "trifuse/error.hpp"
#include "trifuse/structurer.hpp"

namespace trifuse {

/// Read-only HTTP surface over an immutable engine.
///
///   POST /search  {"query": "...", "mode": "full", "k": 10}
///   GET  /healthz
///
/// Requests arriving before set_engine() answer 503. Handlers are stateless;
/// concurrent requests share the engine without locking.
class SearchServer {
public:
    SearchServer() { setup_routes(); }

    void set_engine(std::shared_ptr<const Engine> engine, std::shared_ptr<LlmClient> llm = nullptr) {
        std::lock_guard<std::mutex> lock(mutex_);
        engine_ = std::move(engine);
        llm_ = std::move(llm);
    }

    /// Binds to a free port and returns it (for tests); -1 on failure.
    int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    bool listen(const std::string& host, int port) { return server_.listen(host, port); }
    void stop() { server_.stop(); }
    bool is_running() const { return server_.is_running(); }

private:
    std::pair<std::shared_ptr<const Engine>, std::shared_ptr<LlmClient>> current() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return {engine_, llm_};
    }

    static void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    void setup_routes() {
        server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            const auto [engine, llm] = current();
            if (engine)
                reply_json(res, 200, {{"status", "ready"}});
            else
                reply_json(res, 503, {{"status", "loading"}});
        });

        server_.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
            const auto [engine, llm] = current();
            if (!engine) {
                reply_json(res, 503, {{"error", "NotReady"}, {"message", "engine not loaded"}});
                return;
            }
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const std::exception& e) {
                reply_json(res, 400, {{"error", "MalformedBody"}, {"message", e.what()}});
                return;
            }
            if (!body.is_object() || !body.contains("query") || !body["query"].is_string()) {
                reply_json(res, 400,
                           {{"error", "ValidationError"}, {"message", "body must carry a string \"query\""}});
                return;
            }
            SearchRequest request;
            request.query = body["query"].get<std::string>();
            try {
                request.mode = parse_search_mode(body.value("mode", "full"));
            } catch (const Error& e) {
                reply_json(res, 400, {{"error", "UnknownMode"}, {"message", e.what()}});
                return;
            }
            if (body.contains("k")) {
                if (!body["k"].is_number_unsigned() || body["k"].get<std::size_t>() == 0) {
                    reply_json(res, 400,
                               {{"error", "ValidationError"}, {"message", "k must be a positive integer"}});
                    return;
                }
                request.k = body["k"].get<std::size_t>();
            }
            if (body.contains("per_path_k")) {
                if (!body["per_path_k"].is_number_unsigned() || body["per_path_k"].get<std::size_t>() == 0) {
                    reply_json(res, 400, {{"error", "ValidationError"},
                                          {"message", "per_path_k must be a positive integer"}});
                    return;
                }
                request.per_path_k = body["per_path_k"].get<std::size_t>();
            }
            try {
                const SearchResponse response = engine->search(request, llm.get());
                reply_json(res, 200, response_to_json(response));
            } catch (const Error& e) {
                reply_json(res, 400, {{"error", error_code_name(e.code())}, {"message", e.what()}});
            } catch (const std::exception& e) {
                reply_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
            }
        });
    }

    httplib::Server server_;
    std::shared_ptr<const Engine> engine_;
    std::shared_ptr<LlmClient> llm_;
    mutable std::mutex mutex_;
};

}  // namespace trifuse
