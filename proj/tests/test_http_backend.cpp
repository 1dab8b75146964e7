#include <atomic>
#include <thread>

#include <gtest/gtest.h>

#include "toolforge/http_backend.hpp"

using namespace toolforge;

namespace {

// Local chat-completion endpoint; fails the first `failures` requests with 503.
class FakeEndpoint {
public:
    explicit FakeEndpoint(int failures = 0, int status = 200) : failures_(failures), status_(status)
    {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            if (failures_-- > 0) {
                res.status = 503;
                return;
            }
            res.status = status_;
            const auto j = nlohmann::json::parse(req.body);
            const auto content = "echo: " + j["messages"].back()["content"].get<std::string>();
            res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeEndpoint()
    {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    int hits() const { return hits_; }
    std::string last_body() const { return last_body_; }
    std::string last_auth() const { return last_auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> failures_;
    int status_;
    std::atomic<int> hits_{0};
    std::string last_body_;
    std::string last_auth_;
};

LiveBackendConfig config_for(const FakeEndpoint& e)
{
    LiveBackendConfig c;
    c.endpoint = e.url();
    c.model = "test-model";
    c.api_key = "secret";
    c.backoff_base = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(5);
    return c;
}

ChatRequest request()
{
    return ChatRequest{{{Role::system, "sys"}, {Role::user, "hello"}}, 0.0, 64, "planning"};
}

} // namespace

TEST(LiveBackend, PostsChatBodyAndReturnsContent)
{
    FakeEndpoint endpoint;
    LiveBackend backend(config_for(endpoint));
    EXPECT_EQ(backend.chat(request()), "echo: hello");
    const auto body = nlohmann::json::parse(endpoint.last_body());
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["temperature"], 0.0);
    EXPECT_EQ(body["max_tokens"], 64);
    EXPECT_EQ(endpoint.last_auth(), "Bearer secret");
}

TEST(LiveBackend, RetriesServerErrors)
{
    FakeEndpoint endpoint(2);
    LiveBackend backend(config_for(endpoint));
    EXPECT_EQ(backend.chat(request()), "echo: hello");
    EXPECT_EQ(endpoint.hits(), 3);
}

TEST(LiveBackend, GivesUpAfterThreeRetries)
{
    FakeEndpoint endpoint(100);
    LiveBackend backend(config_for(endpoint));
    EXPECT_THROW(backend.chat(request()), TransportError);
    EXPECT_EQ(endpoint.hits(), 4);
}

TEST(LiveBackend, ClientErrorsAreNotRetried)
{
    FakeEndpoint endpoint(0, 400);
    LiveBackend backend(config_for(endpoint));
    EXPECT_THROW(backend.chat(request()), TransportError);
    EXPECT_EQ(endpoint.hits(), 1);
}

TEST(LiveBackend, UnreachableEndpoint)
{
    LiveBackendConfig c;
    c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    c.max_retries = 1;
    c.backoff_base = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(1);
    LiveBackend backend(c);
    EXPECT_THROW(backend.chat(request()), TransportError);
}

TEST(LiveBackend, RejectsRelativeEndpoint)
{
    LiveBackendConfig c;
    c.endpoint = "localhost/v1";
    EXPECT_THROW(LiveBackend{c}, ConfigError);
}

TEST(LiveBackend, InvalidRequestFailsBeforeNetwork)
{
    FakeEndpoint endpoint;
    LiveBackend backend(config_for(endpoint));
    EXPECT_THROW(backend.chat(ChatRequest{}), BadRequest);
    EXPECT_EQ(endpoint.hits(), 0);
}

TEST(LiveBackend, ExtractContent)
{
    EXPECT_EQ(LiveBackend::extract_content(R"({"choices":[{"message":{"content":"x"}}]})"), "x");
    EXPECT_THROW(LiveBackend::extract_content("not json"), TransportError);
    EXPECT_THROW(LiveBackend::extract_content(R"({"choices":[]})"), TransportError);
}
