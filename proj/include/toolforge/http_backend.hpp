#pragma once

// Live chat-completion client. Kept out of toolforge.hpp so that consumers of the core
// library do not pull in cpp-httplib.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "toolforge/llm_backend.hpp"

namespace toolforge {

struct LiveBackendConfig {
    /// Full URL of the chat-completion endpoint, e.g. http://localhost:8080/v1/chat/completions.
    std::string endpoint;
    std::string model;
    std::string api_key;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    double backoff_factor = 2.0;
    std::chrono::seconds timeout{120};
    std::ptrdiff_t max_in_flight = 4;
};

inline constexpr const char* kApiKeyVariable = "TOOLFORGE_API_KEY";

class LiveBackend final : public ChatBackend {
public:
    explicit LiveBackend(LiveBackendConfig config)
        : config_(std::move(config)), in_flight_(std::max<std::ptrdiff_t>(1, config_.max_in_flight))
    {
        const auto scheme_end = config_.endpoint.find("://");
        if (scheme_end == std::string::npos) {
            throw ConfigError("endpoint must be an absolute URL: " + config_.endpoint);
        }
        const auto path_start = config_.endpoint.find('/', scheme_end + 3);
        base_ = config_.endpoint.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
    }

    /// Reads the credential from TOOLFORGE_API_KEY when the config carries none.
    static LiveBackendConfig with_environment_key(LiveBackendConfig config)
    {
        if (config.api_key.empty()) {
            if (const char* key = std::getenv(kApiKeyVariable)) {
                config.api_key = key;
            }
        }
        return config;
    }

    LiveBackend(const LiveBackend&) = delete;
    LiveBackend& operator=(const LiveBackend&) = delete;

    std::string chat(const ChatRequest& request) const override
    {
        request.validate();
        nlohmann::json body = {
            {"model", config_.model},
            {"messages", nlohmann::json::array()},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        for (const auto& m : request.messages) {
            body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
        }
        const std::string payload = body.dump();

        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<1024>& s;
            ~Release() { s.release(); }
        } release{in_flight_};

        auto delay = config_.backoff_base;
        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(delay);
                delay = std::chrono::milliseconds(
                    static_cast<long long>(static_cast<double>(delay.count()) * config_.backoff_factor));
            }
            httplib::Client client(base_);
            client.set_connection_timeout(config_.timeout);
            client.set_read_timeout(config_.timeout);
            client.set_write_timeout(config_.timeout);
            httplib::Headers headers;
            if (!config_.api_key.empty()) {
                headers.emplace("Authorization", "Bearer " + config_.api_key);
            }
            auto res = client.Post(path_, headers, payload, "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            return extract_content(res->body);
        }
        throw TransportError("giving up after " + std::to_string(config_.max_retries + 1)
                             + " attempts: " + last_error);
    }

    static std::string extract_content(const std::string& body)
    {
        const auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) {
            throw TransportError("response is not JSON");
        }
        try {
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw TransportError("response lacks choices[0].message.content");
        }
    }

private:
    LiveBackendConfig config_;
    std::string base_;
    std::string path_;
    mutable std::counting_semaphore<1024> in_flight_;
};

} // namespace toolforge
