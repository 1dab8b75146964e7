#pragma once

// Assistant-turn grammar:
//   <think>...</think> followed by either one or more
//   <tool_call>\n{"name": ..., "arguments": {...}}\n</tool_call> blocks separated by one newline,
//   or a single <answer>...</answer> block.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/text.hpp"

namespace toolforge {

struct ToolCall {
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();
    /// False when the block body was not a {"name", "arguments"} object (lenient scan only).
    bool valid = true;

    bool operator==(const ToolCall&) const = default;
};

struct ParsedAssistantTurn {
    std::optional<std::string> think;
    std::vector<ToolCall> tool_calls;
    std::optional<std::string> answer;
    std::string residue;
    std::size_t think_blocks = 0;

    bool well_formed() const { return think.has_value() && think_blocks == 1 && text::is_blank(residue); }
};

namespace detail {

inline bool starts_with_at(std::string_view s, std::size_t pos, std::string_view prefix)
{
    return s.substr(pos, prefix.size()) == prefix;
}

inline std::size_t skip_space(std::string_view s, std::size_t pos)
{
    while (pos < s.size() && text::is_space(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos;
}

inline std::size_t count_occurrences(std::string_view s, std::string_view needle)
{
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
    return n;
}

inline std::optional<ToolCall> decode_call(std::string_view body)
{
    const auto j = nlohmann::json::parse(text::trim(body), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("name") || !j["name"].is_string()
        || !j.contains("arguments") || !j["arguments"].is_object() || j.size() != 2) {
        return std::nullopt;
    }
    return ToolCall{j["name"].get<std::string>(), j["arguments"], true};
}

} // namespace detail

/// Strict parse; never throws. Anything outside the recognized blocks goes to residue.
inline ParsedAssistantTurn parse_assistant_turn(std::string_view content)
{
    using detail::skip_space;
    using detail::starts_with_at;
    constexpr std::string_view kThinkOpen = "<think>", kThinkClose = "</think>";
    constexpr std::string_view kCallOpen = "<tool_call>", kCallClose = "</tool_call>";
    constexpr std::string_view kAnswerOpen = "<answer>", kAnswerClose = "</answer>";

    ParsedAssistantTurn out;
    out.think_blocks = detail::count_occurrences(content, kThinkOpen);
    std::size_t pos = skip_space(content, 0);
    if (!starts_with_at(content, pos, kThinkOpen)) {
        out.residue = std::string(content);
        return out;
    }
    const auto close = content.find(kThinkClose, pos + kThinkOpen.size());
    if (close == std::string_view::npos) {
        out.residue = std::string(content);
        return out;
    }
    out.think = std::string(content.substr(pos + kThinkOpen.size(), close - pos - kThinkOpen.size()));
    pos = skip_space(content, close + kThinkClose.size());

    while (pos < content.size()) {
        if (starts_with_at(content, pos, kCallOpen) && !out.answer) {
            const auto end = content.find(kCallClose, pos + kCallOpen.size());
            if (end == std::string_view::npos) {
                out.residue += content.substr(pos);
                break;
            }
            const auto body = content.substr(pos + kCallOpen.size(), end - pos - kCallOpen.size());
            if (auto call = detail::decode_call(body)) {
                out.tool_calls.push_back(std::move(*call));
            } else {
                out.residue += content.substr(pos, end + kCallClose.size() - pos);
            }
            pos = skip_space(content, end + kCallClose.size());
        } else if (starts_with_at(content, pos, kAnswerOpen) && !out.answer && out.tool_calls.empty()) {
            const auto end = content.find(kAnswerClose, pos + kAnswerOpen.size());
            if (end == std::string_view::npos) {
                out.residue += content.substr(pos);
                break;
            }
            out.answer = std::string(content.substr(pos + kAnswerOpen.size(), end - pos - kAnswerOpen.size()));
            pos = skip_space(content, end + kAnswerClose.size());
        } else {
            out.residue += content.substr(pos);
            break;
        }
    }
    return out;
}

inline std::string render_call(const ToolCall& call)
{
    return "<tool_call>\n{\"name\": " + nlohmann::json(call.name).dump() + ", \"arguments\": " + call.arguments.dump()
           + "}\n</tool_call>";
}

inline std::string render_assistant_turn(std::string_view think, const std::vector<ToolCall>& calls)
{
    std::string out = "<think>" + std::string(think) + "</think>";
    for (const auto& c : calls) {
        out += "\n" + render_call(c);
    }
    return out;
}

inline std::string render_answer_turn(std::string_view think, std::string_view answer)
{
    return "<think>" + std::string(think) + "</think>\n<answer>" + std::string(answer) + "</answer>";
}

/// Inverse of parse_assistant_turn for well-formed turns.
inline std::string render(const ParsedAssistantTurn& t)
{
    if (t.answer) {
        return render_answer_turn(t.think.value_or(""), *t.answer);
    }
    return render_assistant_turn(t.think.value_or(""), t.tool_calls);
}

// ---------------------------------------------------------------------------
// Lenient scan: used by every rule except tag well-formedness, so that a broken tag does
// not cascade into unrelated failures.

struct ScannedAssistantTurn {
    bool has_think = false;
    std::string think;
    std::vector<ToolCall> tool_calls;
    std::optional<std::string> answer;
};

inline ScannedAssistantTurn scan_assistant_turn(std::string_view content)
{
    ScannedAssistantTurn out;
    std::size_t body_start = 0;
    const auto open = content.find("<think>");
    if (open != std::string_view::npos) {
        out.has_think = true;
        const auto from = open + 7;
        auto close = content.find("</think>", from);
        if (close != std::string_view::npos) {
            body_start = close + 8;
        } else {
            close = std::min(content.find("<tool_call>", from), content.find("<answer>", from));
            close = std::min(close, content.size());
            body_start = close;
        }
        out.think = std::string(content.substr(from, close - from));
    }
    const auto body = content.substr(body_start);
    for (auto pos = body.find("<tool_call>"); pos != std::string_view::npos; pos = body.find("<tool_call>", pos + 1)) {
        const auto end = body.find("</tool_call>", pos);
        if (end == std::string_view::npos) {
            out.tool_calls.push_back({"", nlohmann::json::object(), false});
            break;
        }
        if (auto call = detail::decode_call(body.substr(pos + 11, end - pos - 11))) {
            out.tool_calls.push_back(std::move(*call));
        } else {
            out.tool_calls.push_back({"", nlohmann::json::object(), false});
        }
        pos = end;
    }
    if (const auto answer = text::extract_block(body, "answer")) {
        out.answer = std::string(*answer);
    }
    return out;
}

} // namespace toolforge
