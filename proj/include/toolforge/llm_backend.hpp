#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/error.hpp"
#include "toolforge/hash.hpp"

namespace toolforge {

enum class Role { system, user, assistant, tool };

inline std::string_view to_string(Role r)
{
    switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
    }
    return "?";
}

inline Role parse_role(std::string_view s)
{
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    if (s == "tool") return Role::tool;
    throw ParseError("unknown role '" + std::string(s) + "'");
}

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 4096;
    /// Semantic label of the request, e.g. "planning", "dialogue", "judge:principle-1".
    std::string tag;

    void validate() const
    {
        if (messages.empty()) {
            throw BadRequest("request has no messages");
        }
        if (messages.front().role != Role::system) {
            throw BadRequest("first message must have role system");
        }
        for (const auto& m : messages) {
            if ((m.role == Role::system || m.role == Role::user) && m.content.empty()) {
                throw BadRequest("empty " + std::string(to_string(m.role)) + " message");
            }
        }
        if (temperature < 0.0) {
            throw BadRequest("negative temperature");
        }
        if (max_tokens <= 0) {
            throw BadRequest("max_tokens must be positive");
        }
    }
};

/// FNV-1a 64 over role, 0x1F, content, 0x1E for each message in order.
inline std::uint64_t fingerprint(std::span<const ChatMessage> messages)
{
    Fnv1a64 h;
    for (const auto& m : messages) {
        h.bytes(to_string(m.role)).byte(0x1F).bytes(m.content).byte(0x1E);
    }
    return h.value();
}

/// Chat-completion interface. Implementations are shareable and safe to call
/// concurrently.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const ChatRequest& request) const = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock

struct BackendScript {
    enum class DefaultPolicy { error, echo };

    std::map<std::pair<std::string, std::uint64_t>, std::string> entries;
    DefaultPolicy default_policy = DefaultPolicy::error;

    void add(std::string tag, std::uint64_t fp, std::string completion)
    {
        entries.insert_or_assign({std::move(tag), fp}, std::move(completion));
    }

    void add(std::string tag, std::span<const ChatMessage> messages, std::string completion)
    {
        add(std::move(tag), fingerprint(messages), std::move(completion));
    }

    const std::string* find(const std::string& tag, std::uint64_t fp) const
    {
        const auto it = entries.find({tag, fp});
        return it == entries.end() ? nullptr : &it->second;
    }

    /// Script files are JSON arrays of {tag, fingerprint (hex), completion}.
    static BackendScript from_json(const nlohmann::json& j)
    {
        if (!j.is_array()) {
            throw ParseError("script must be a JSON array");
        }
        BackendScript script;
        for (const auto& e : j) {
            if (!e.is_object() || !e.contains("tag") || !e.contains("fingerprint") || !e.contains("completion")) {
                throw ParseError("script entry needs tag, fingerprint and completion");
            }
            const auto fp = parse_hex(e.at("fingerprint").get<std::string>());
            if (!fp) {
                throw ParseError("bad fingerprint '" + e.at("fingerprint").get<std::string>() + "'");
            }
            script.add(e.at("tag").get<std::string>(), *fp, e.at("completion").get<std::string>());
        }
        return script;
    }

    nlohmann::json to_json() const
    {
        auto arr = nlohmann::json::array();
        for (const auto& [key, completion] : entries) {
            arr.push_back({{"tag", key.first}, {"fingerprint", to_hex(key.second)}, {"completion", completion}});
        }
        return arr;
    }
};

/// Deterministic test double: a pure table lookup keyed by (tag, fingerprint).
class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(BackendScript script) : script_(std::move(script)) {}

    std::string chat(const ChatRequest& request) const override
    {
        request.validate();
        const auto fp = fingerprint(request.messages);
        if (const auto* hit = script_.find(request.tag, fp)) {
            return *hit;
        }
        if (script_.default_policy == BackendScript::DefaultPolicy::echo) {
            return request.messages.back().content;
        }
        throw ScriptMiss("no entry for tag '" + request.tag + "' fingerprint " + to_hex(fp));
    }

    const BackendScript& script() const noexcept { return script_; }

private:
    BackendScript script_;
};

/// Answers from the script when it has an entry, otherwise defers to `fallback`.
class OverlayBackend final : public ChatBackend {
public:
    OverlayBackend(BackendScript script, std::shared_ptr<const ChatBackend> fallback)
        : script_(std::move(script)), fallback_(std::move(fallback))
    {}

    std::string chat(const ChatRequest& request) const override
    {
        request.validate();
        if (const auto* hit = script_.find(request.tag, fingerprint(request.messages))) {
            return *hit;
        }
        return fallback_->chat(request);
    }

private:
    BackendScript script_;
    std::shared_ptr<const ChatBackend> fallback_;
};

/// Replaces completions with garbage for a pseudo-random fraction of matching requests.
/// The draw is a hash of (seed, fingerprint), so a given request always fails or never does.
struct FaultRule {
    std::string tag;
    /// Substring that must occur in the last message; empty matches everything.
    std::string contains;
    double probability = 0.0;
    std::string completion = "<malformed completion>";
};

class FaultInjectingBackend final : public ChatBackend {
public:
    FaultInjectingBackend(std::shared_ptr<const ChatBackend> inner, std::vector<FaultRule> rules, std::uint64_t seed)
        : inner_(std::move(inner)), rules_(std::move(rules)), seed_(seed)
    {}

    std::string chat(const ChatRequest& request) const override
    {
        request.validate();
        const auto fp = fingerprint(request.messages);
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            const auto& rule = rules_[i];
            if (rule.tag != request.tag) {
                continue;
            }
            if (!rule.contains.empty() && request.messages.back().content.find(rule.contains) == std::string::npos) {
                continue;
            }
            const double u = unit_interval(mix64(Fnv1a64{}.u64(seed_).u64(i).u64(fp).value()));
            if (u < rule.probability) {
                return rule.completion;
            }
        }
        return inner_->chat(request);
    }

private:
    std::shared_ptr<const ChatBackend> inner_;
    std::vector<FaultRule> rules_;
    std::uint64_t seed_;
};

} // namespace toolforge
