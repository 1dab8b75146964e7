#pragma once

// Rewrites of a valid sample that break one semantic principle while keeping every rule,
// either scripted or asked of a model.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "toolforge/corruptions.hpp"
#include "toolforge/error.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/prompts.hpp"
#include "toolforge/sample.hpp"

namespace toolforge {

namespace rewrite {

inline std::vector<std::string> called_names(const Sample& s)
{
    std::vector<std::string> out;
    for (const auto& t : s.turns) {
        if (t.role != Role::assistant) continue;
        for (const auto& c : scan_assistant_turn(t.content).tool_calls) {
            if (std::find(out.begin(), out.end(), c.name) == out.end()) out.push_back(c.name);
        }
    }
    return out;
}

/// An offered tool with a query slot that the dialogue never calls, smallest name first.
inline const VirtualTool* unused_tool(const Sample& s)
{
    const auto used = called_names(s);
    const VirtualTool* best = nullptr;
    for (const auto& t : s.tools_offered) {
        if (!t.query_parameter() || std::find(used.begin(), used.end(), t.name) != used.end()) continue;
        if (!best || t.name < best->name) best = &t;
    }
    return best;
}

inline std::optional<std::string> first_call_name(const Sample& s)
{
    const auto turn = corrupt::assistant_turn(s, corrupt::Which::first, true);
    if (!turn) return std::nullopt;
    return scan_assistant_turn(s.turns[*turn].content).tool_calls.front().name;
}

/// Replaces whole-identifier occurrences of `from`.
inline std::string replace_identifier(const std::string& s, const std::string& from, const std::string& to)
{
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = s.find(from, pos);
        if (hit == std::string::npos) break;
        const auto end = hit + from.size();
        const bool left = hit == 0 || !text::is_word_char(static_cast<unsigned char>(s[hit - 1]));
        const bool right = end >= s.size() || !text::is_word_char(static_cast<unsigned char>(s[end]));
        out += s.substr(pos, hit - pos);
        out += left && right ? to : from;
        pos = end;
    }
    return out + s.substr(pos);
}

/// Principle 1: every call of the first-used tool goes to an unsuitable tool instead, with
/// thought text kept consistent so only the choice itself is wrong.
inline std::optional<Sample> wrong_tool(const Sample& s)
{
    const auto from_name = first_call_name(s);
    const auto* to = unused_tool(s);
    if (!from_name || !to) return std::nullopt;
    const auto* from = corrupt::offered(s, *from_name);
    if (!from) return std::nullopt;
    Sample out = s;
    for (auto& t : out.turns) {
        if (t.role != Role::assistant) continue;
        const auto n = scan_assistant_turn(t.content).tool_calls.size();
        for (std::size_t k = 0; k < n; ++k) {
            corrupt::edit_call(t.content, k, [&](ToolCall& c) {
                if (c.name != from->name) return false;
                c.arguments = fill_arguments(*to, query_of(*from, c.arguments));
                c.name = to->name;
                return true;
            });
        }
        const auto close = t.content.find("</think>");
        if (close != std::string::npos) {
            t.content = replace_identifier(t.content.substr(0, close), from->name, to->name) + t.content.substr(close);
        }
    }
    for (auto& id : out.provenance.tool_ids) {
        if (id == from->id) id = to->id;
    }
    return out;
}

/// Principle 2: an irrelevant, unassertive sentence inside the first thought.
inline std::optional<Sample> non_sequitur(const Sample& s)
{
    return corrupt::add_to_think(s, corrupt::Which::first,
                                 "the weather has been mild all week, so the next step follows naturally.");
}

/// Principle 3: the first thought announces a tool other than the one it calls.
inline std::optional<Sample> thought_action_mismatch(const Sample& s)
{
    const auto turn = corrupt::assistant_turn(s, corrupt::Which::first, true);
    const auto* other = unused_tool(s);
    if (!turn || !other) return std::nullopt;
    const auto called = scan_assistant_turn(s.turns[*turn].content).tool_calls.front().name;
    Sample out = s;
    auto& content = out.turns[*turn].content;
    const auto close = content.find("</think>");
    if (close == std::string::npos) return std::nullopt;
    auto think = content.substr(0, close);
    const auto renamed = replace_identifier(think, called, other->name);
    think = renamed != think ? renamed : think + " I will now call " + other->name + ".";
    content = think + content.substr(close);
    return out;
}

/// Scripted rewrite for principle `principle` (0-based, kPrinciples order).
inline std::optional<Sample> scripted(const Sample& s, std::size_t principle)
{
    switch (principle) {
    case 0: return wrong_tool(s);
    case 1: return non_sequitur(s);
    case 2: return thought_action_mismatch(s);
    }
    throw BadRequest("no principle " + std::to_string(principle));
}

} // namespace rewrite

inline ChatRequest violation_request(const Sample& s, std::size_t principle)
{
    if (principle >= kPrinciples.size()) throw BadRequest("no principle " + std::to_string(principle));
    const nlohmann::json payload = {{"principle", kPrinciples[principle].key}, {"sample", sample_to_json(s)}};
    const std::string instructions = std::string(kRewriterInstructions) + "\nPrinciple: " + std::string(kPrinciples[principle].statement);
    return task_request("violation:principle-" + std::to_string(principle + 1), kRewriterSystem, instructions, payload, 8192);
}

inline Sample parse_violation(std::string_view completion)
{
    const auto block = text::extract_block(completion, "sample");
    if (!block) throw ParseError("rewrite completion has no <sample> block");
    const auto j = nlohmann::json::parse(*block, nullptr, false);
    if (!j.is_object()) throw ParseError("rewrite <sample> block is not a JSON object");
    return sample_from_json(j);
}

} // namespace toolforge
