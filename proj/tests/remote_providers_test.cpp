#include "trifuse/remote_providers.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

using namespace trifuse;

namespace {

/// Local HTTP stub with scriptable handlers, for fault injection.
class StubServer {
public:
    StubServer() {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            res.status = embed_status;
            res.set_content(embed_body, "application/json");
        });
        server_.Post("/llm", [this](const httplib::Request& req, httplib::Response& res) {
            last_body = req.body;
            res.status = 200;
            res.set_content(llm_body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    std::string embed_body = R"({"embedding": [3.0, 4.0]})";
    int embed_status = 200;
    std::string llm_body = R"({"text": "{}"})";
    std::string last_body;
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(RemoteEmbedder, NormalizesWellFormedResponse) {
    StubServer stub;
    RemoteEmbedder embedder(ProviderConfig{stub.endpoint("/embed"), "sekrit"}, 2);
    const Embedding e = embedder.embed("hello");
    ASSERT_EQ(e.dim(), 2u);
    EXPECT_NEAR(e.v[0], 0.6, 1e-12);
    EXPECT_NEAR(e.v[1], 0.8, 1e-12);
    EXPECT_EQ(stub.last_auth, "Bearer sekrit");
    EXPECT_EQ(nlohmann::json::parse(stub.last_body).at("input"), "hello");
}

TEST(RemoteEmbedder, WrongDimensionRejected) {
    StubServer stub;
    RemoteEmbedder embedder(ProviderConfig{stub.endpoint("/embed")}, 3);
    try {
        embedder.embed("hello");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimMismatch);
    }
}

TEST(RemoteEmbedder, DimDriftAcrossCallsRejected) {
    StubServer stub;
    RemoteEmbedder embedder(ProviderConfig{stub.endpoint("/embed")}, 0);
    embedder.embed("first");  // locks dim to 2
    EXPECT_EQ(embedder.dim(), 2u);
    stub.embed_body = R"({"embedding": [1.0, 2.0, 3.0]})";
    EXPECT_THROW(embedder.embed("second"), Error);
}

TEST(RemoteEmbedder, MalformedResponses) {
    StubServer stub;
    RemoteEmbedder embedder(ProviderConfig{stub.endpoint("/embed")}, 0);

    stub.embed_body = "this is not json";
    try {
        embedder.embed("x");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
    }

    stub.embed_body = R"({"vectors": [1.0]})";
    EXPECT_THROW(embedder.embed("x"), Error);

    stub.embed_body = R"({"embedding": ["a", "b"]})";
    EXPECT_THROW(embedder.embed("x"), Error);

    stub.embed_body = R"({"embedding": [0.0, 0.0]})";
    try {
        embedder.embed("x");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
    }
}

TEST(RemoteEmbedder, HttpErrorStatusIsProviderUnavailable) {
    StubServer stub;
    stub.embed_status = 500;
    RemoteEmbedder embedder(ProviderConfig{stub.endpoint("/embed")}, 0);
    try {
        embedder.embed("x");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderUnavailable);
    }
}

TEST(RemoteEmbedder, UnreachableEndpointIsProviderUnavailable) {
    // Nothing listens on this port.
    RemoteEmbedder embedder(ProviderConfig{"http://127.0.0.1:1/embed", "", 1}, 0);
    try {
        embedder.embed("x");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderUnavailable);
    }
}

TEST(HttpLlmClient, PromptProtocol) {
    StubServer stub;
    stub.llm_body = R"({"text": "{\"country\": \"India\"}"})";
    HttpLlmClient client(ProviderConfig{stub.endpoint("/llm")});
    EXPECT_EQ(client.complete("the prompt"), R"({"country": "India"})");
    EXPECT_EQ(nlohmann::json::parse(stub.last_body).at("prompt"), "the prompt");
}

TEST(HttpLlmClient, ChatProtocolShape) {
    StubServer stub;
    HttpLlmClient client(ProviderConfig{stub.endpoint("/llm")}, /*chat_format=*/true);
    client.complete("hi");
    const nlohmann::json body = nlohmann::json::parse(stub.last_body);
    ASSERT_TRUE(body.contains("messages"));
    EXPECT_EQ(body["messages"][0]["role"], "user");
    EXPECT_EQ(body["messages"][0]["content"], "hi");
}

TEST(HttpLlmClient, MissingTextFieldIsMalformed) {
    StubServer stub;
    stub.llm_body = R"({"output": "nope"})";
    HttpLlmClient client(ProviderConfig{stub.endpoint("/llm")});
    try {
        client.complete("x");
        FAIL() << "expected Error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
    }
}

TEST(EndpointSplitting, Variants) {
    using trifuse::detail::split_endpoint;
    EXPECT_EQ(split_endpoint("http://h:1/p/q"), (std::pair<std::string, std::string>{"http://h:1", "/p/q"}));
    EXPECT_EQ(split_endpoint("http://h:1"), (std::pair<std::string, std::string>{"http://h:1", "/"}));
    EXPECT_EQ(split_endpoint("h:1/x"), (std::pair<std::string, std::string>{"http://h:1", "/x"}));
}
