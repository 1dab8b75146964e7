#pragma once

// Targeted corruptions of valid samples. Each one is aimed at a single rule and leaves the
// rest of the sample alone wherever the sample's structure allows it; only R9 corruptions
// touch provenance.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/assistant_format.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/validation.hpp"

namespace toolforge {

struct Corruption {
    std::string id;
    RuleId target = RuleId::R1;
    nlohmann::json params = nlohmann::json::object();
    /// nullopt when the corruption does not apply to the sample (nothing to change).
    std::function<std::optional<Sample>(const Sample&)> apply;
};

namespace corrupt {

enum class Which { first, last };

inline std::optional<std::size_t> assistant_turn(const Sample& s, Which which, bool with_calls)
{
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        if (s.turns[i].role != Role::assistant) continue;
        if (with_calls && scan_assistant_turn(s.turns[i].content).tool_calls.empty()) continue;
        found = i;
        if (which == Which::first) break;
    }
    return found;
}

/// [begin, end) of the k-th <tool_call> block body after the think block.
inline std::optional<std::pair<std::size_t, std::size_t>> call_span(const std::string& content, std::size_t k)
{
    auto close = content.find("</think>");
    std::size_t pos = close == std::string::npos ? 0 : close;
    for (std::size_t i = 0;; ++i) {
        pos = content.find("<tool_call>", pos);
        if (pos == std::string::npos) return std::nullopt;
        const auto end = content.find("</tool_call>", pos);
        if (end == std::string::npos) return std::nullopt;
        if (i == k) return std::pair{pos, end + 12};
        pos = end;
    }
}

/// Rewrites the k-th call of an assistant turn in place. `edit` returns false to decline.
inline bool edit_call(std::string& content, std::size_t k, const std::function<bool(ToolCall&)>& edit)
{
    const auto span = call_span(content, k);
    if (!span) return false;
    const auto block = content.substr(span->first + 11, span->second - 12 - span->first - 11);
    auto call = detail::decode_call(block);
    if (!call || !edit(*call)) return false;
    content.replace(span->first, span->second - span->first, render_call(*call));
    return true;
}

inline std::optional<Sample> on_call(const Sample& s, Which which, const std::function<bool(ToolCall&, Sample&)>& edit)
{
    const auto turn = assistant_turn(s, which, true);
    if (!turn) return std::nullopt;
    Sample out = s;
    const auto n = scan_assistant_turn(s.turns[*turn].content).tool_calls.size();
    const std::size_t k = which == Which::first ? 0 : n - 1;
    if (!edit_call(out.turns[*turn].content, k, [&](ToolCall& c) { return edit(c, out); })) return std::nullopt;
    return out;
}

/// Renames every call of `from`, so attempt chains that reuse a tool stay consistent.
inline void rename_calls(Sample& s, const std::string& from, const std::string& to)
{
    for (auto& t : s.turns) {
        if (t.role != Role::assistant) continue;
        const auto n = scan_assistant_turn(t.content).tool_calls.size();
        for (std::size_t k = 0; k < n; ++k) {
            edit_call(t.content, k, [&](ToolCall& c) {
                if (c.name != from) return false;
                c.name = to;
                return true;
            });
        }
    }
}

inline const VirtualTool* offered(const Sample& s, const std::string& name)
{
    for (const auto& t : s.tools_offered) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

inline std::optional<Sample> edit_text(const Sample& s, Which which, bool with_calls,
                                       const std::function<bool(std::string&)>& edit)
{
    const auto turn = assistant_turn(s, which, with_calls);
    if (!turn) return std::nullopt;
    Sample out = s;
    if (!edit(out.turns[*turn].content)) return std::nullopt;
    return out;
}

inline std::optional<Sample> edit_answer(const Sample& s, const std::function<std::optional<std::string>(const std::string&)>& edit)
{
    const auto turn = assistant_turn(s, Which::last, false);
    if (!turn) return std::nullopt;
    auto& content = s.turns[*turn].content;
    const auto open = content.rfind("<answer>");
    const auto close = content.rfind("</answer>");
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    const auto old = content.substr(open + 8, close - open - 8);
    const auto replacement = edit(old);
    if (!replacement || *replacement == old) return std::nullopt;
    Sample out = s;
    out.turns[*turn].content = content.substr(0, open + 8) + *replacement + content.substr(close);
    return out;
}

/// Appends a sentence at the end of a think block.
inline std::optional<Sample> add_to_think(const Sample& s, Which which, const std::string& sentence)
{
    return edit_text(s, which, false, [&](std::string& c) {
        const auto close = c.find("</think>");
        if (close == std::string::npos) return false;
        c.insert(close, " " + sentence);
        return true;
    });
}

/// Group of turns formed by one calling assistant turn and its tool turns.
inline std::optional<std::pair<std::size_t, std::size_t>> call_group(const Sample& s, Which which)
{
    const auto turn = assistant_turn(s, which, true);
    if (!turn) return std::nullopt;
    std::size_t end = *turn + 1;
    while (end < s.turns.size() && s.turns[end].role == Role::tool) ++end;
    return std::pair{*turn, end};
}

inline std::optional<std::size_t> tool_turn(const Sample& s, Which which)
{
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        if (s.turns[i].role != Role::tool) continue;
        found = i;
        if (which == Which::first) break;
    }
    return found;
}

inline const char* where(Which w) { return w == Which::first ? "first" : "last"; }

} // namespace corrupt

namespace corruption_factory {

using corrupt::Which;

inline Corruption drop_tag(Which w, std::string tag)
{
    return {std::string("R1.drop_") + (tag == "</think>" ? "think_close" : "think_open") + "@" + corrupt::where(w),
            RuleId::R1,
            {{"turn", corrupt::where(w)}, {"tag", tag}},
            [w, tag](const Sample& s) {
                return corrupt::edit_text(s, w, false, [&](std::string& c) {
                    const auto pos = c.find(tag);
                    if (pos == std::string::npos) return false;
                    c.erase(pos, tag.size());
                    return true;
                });
            }};
}

inline Corruption extra_think(Which w)
{
    return {std::string("R1.extra_think@") + corrupt::where(w), RuleId::R1, {{"turn", corrupt::where(w)}}, [w](const Sample& s) {
                return corrupt::edit_text(s, w, false, [](std::string& c) {
                    const auto pos = c.find("</think>");
                    if (pos == std::string::npos) return false;
                    c.insert(pos + 8, "<think>checking.</think>");
                    return true;
                });
            }};
}

inline Corruption trailing_text()
{
    return {"R1.trailing_text@last", RuleId::R1, {{"turn", "last"}, {"text", "\nDone."}}, [](const Sample& s) {
                return corrupt::edit_text(s, Which::last, false, [](std::string& c) {
                    c += "\nDone.";
                    return true;
                });
            }};
}

inline Corruption duplicate_tool_turn(Which w)
{
    return {std::string("R2.duplicate_tool_turn@") + corrupt::where(w), RuleId::R2, {{"turn", corrupt::where(w)}},
            [w](const Sample& s) -> std::optional<Sample> {
                const auto t = corrupt::tool_turn(s, w);
                if (!t) return std::nullopt;
                Sample out = s;
                out.turns.insert(out.turns.begin() + static_cast<std::ptrdiff_t>(*t) + 1, s.turns[*t]);
                return out;
            }};
}

inline Corruption swap_opening()
{
    return {"R2.swap_opening", RuleId::R2, nlohmann::json::object(), [](const Sample& s) -> std::optional<Sample> {
                if (s.turns.size() < 2 || s.turns[0].role == s.turns[1].role) return std::nullopt;
                Sample out = s;
                std::swap(out.turns[0], out.turns[1]);
                return out;
            }};
}

inline Corruption append_user_turn()
{
    return {"R2.append_user_turn", RuleId::R2, {{"content", "Thanks."}}, [](const Sample& s) -> std::optional<Sample> {
                Sample out = s;
                out.turns.push_back({Role::user, "Thanks."});
                return out;
            }};
}

inline Corruption rename_call(Which w, std::string suffix)
{
    const bool replace = suffix.empty();
    return {std::string("R3.") + (replace ? "rename_unknown" : "rename_typo") + "@" + corrupt::where(w),
            RuleId::R3,
            {{"call", corrupt::where(w)}, {"name", replace ? "unknown_tool" : "<name>" + suffix}},
            [w, suffix, replace](const Sample& s) {
                std::string from, to;
                auto out = corrupt::on_call(s, w, [&](ToolCall& c, Sample& o) {
                    to = replace ? "unknown_tool" : c.name + suffix;
                    if (to == c.name || corrupt::offered(o, to)) return false;
                    from = c.name;
                    c.name = to;
                    return true;
                });
                if (out) corrupt::rename_calls(*out, from, to);
                return out;
            }};
}

inline Corruption unoffer_called_tool()
{
    return {"R3.unoffer@first", RuleId::R3, {{"call", "first"}}, [](const Sample& s) -> std::optional<Sample> {
                const auto turn = corrupt::assistant_turn(s, Which::first, true);
                if (!turn) return std::nullopt;
                const auto name = scan_assistant_turn(s.turns[*turn].content).tool_calls.front().name;
                Sample out = s;
                const auto before = out.tools_offered.size();
                std::erase_if(out.tools_offered, [&](const auto& t) { return t.name == name; });
                if (out.tools_offered.size() == before) return std::nullopt;
                return out;
            }};
}

inline Corruption drop_required(Which w)
{
    return {std::string("R4.drop_required@") + corrupt::where(w), RuleId::R4, {{"call", corrupt::where(w)}},
            [w](const Sample& s) {
                return corrupt::on_call(s, w, [](ToolCall& c, Sample& out) {
                    const auto* tool = corrupt::offered(out, c.name);
                    if (!tool) return false;
                    for (const auto& p : tool->parameters) {
                        if (p.required && c.arguments.contains(p.name)) {
                            c.arguments.erase(p.name);
                            return true;
                        }
                    }
                    return false;
                });
            }};
}

inline Corruption set_query(std::string id, nlohmann::json value)
{
    return {std::move(id), RuleId::R4, {{"call", "first"}, {"value", value}}, [value](const Sample& s) {
                return corrupt::on_call(s, Which::first, [&](ToolCall& c, Sample& out) {
                    const auto* tool = corrupt::offered(out, c.name);
                    const auto* q = tool ? tool->query_parameter() : nullptr;
                    if (!q || !c.arguments.contains(q->name)) return false;
                    c.arguments[q->name] = value;
                    return true;
                });
            }};
}

inline Corruption unknown_field()
{
    return {"R4.unknown_field@first", RuleId::R4, {{"call", "first"}, {"field", "verbose"}}, [](const Sample& s) {
                return corrupt::on_call(s, Which::first, [](ToolCall& c, Sample& out) {
                    const auto* tool = corrupt::offered(out, c.name);
                    if (!tool || tool->parameter("verbose") || !c.arguments.is_object()) return false;
                    c.arguments["verbose"] = true;
                    return true;
                });
            }};
}

inline Corruption rewrite_answer(std::string id, RuleId target, nlohmann::json params,
                                 std::function<std::optional<std::string>(const std::string&)> edit)
{
    return {std::move(id), target, std::move(params),
            [edit = std::move(edit)](const Sample& s) { return corrupt::edit_answer(s, edit); }};
}

inline Corruption fabricate(std::string id, Which w, std::string sentence)
{
    return {std::move(id), RuleId::R6, {{"turn", corrupt::where(w)}, {"sentence", sentence}},
            [w, sentence](const Sample& s) { return corrupt::add_to_think(s, w, sentence); }};
}

inline Corruption duplicate_call_group(Which w)
{
    return {std::string("R8.duplicate_call_group@") + corrupt::where(w), RuleId::R8, {{"group", corrupt::where(w)}},
            [w](const Sample& s) -> std::optional<Sample> {
                const auto g = corrupt::call_group(s, w);
                if (!g) return std::nullopt;
                Sample out = s;
                const auto b = s.turns.begin();
                out.turns.insert(out.turns.begin() + static_cast<std::ptrdiff_t>(g->second),
                                 b + static_cast<std::ptrdiff_t>(g->first), b + static_cast<std::ptrdiff_t>(g->second));
                return out;
            }};
}

inline Corruption drop_call_group()
{
    return {"R8.drop_call_group@first", RuleId::R8, {{"group", "first"}}, [](const Sample& s) -> std::optional<Sample> {
                const auto g = corrupt::call_group(s, Which::first);
                if (!g) return std::nullopt;
                Sample out = s;
                out.turns.erase(out.turns.begin() + static_cast<std::ptrdiff_t>(g->first),
                                out.turns.begin() + static_cast<std::ptrdiff_t>(g->second));
                return out;
            }};
}

inline Corruption provenance_edit(std::string id, std::string field, std::function<bool(Provenance&)> edit)
{
    return {std::move(id), RuleId::R9, {{"field", std::move(field)}}, [edit = std::move(edit)](const Sample& s) -> std::optional<Sample> {
                Sample out = s;
                if (!edit(out.provenance)) return std::nullopt;
                return out;
            }};
}

inline bool blank(std::string& field)
{
    if (field.empty()) return false;
    field.clear();
    return true;
}

} // namespace corruption_factory

/// The canonical corruption of each rule, in rule order.
inline std::vector<Corruption> atomic_corruptions()
{
    using namespace corruption_factory;
    return {
        drop_tag(Which::first, "</think>"),
        duplicate_tool_turn(Which::first),
        rename_call(Which::first, ""),
        drop_required(Which::first),
        rewrite_answer("R5.wrap_markup", RuleId::R5, {{"wrap", "<b>"}},
                       [](const std::string& a) { return "<b>" + a + "</b>"; }),
        fabricate("R6.fabricate@last", Which::last, "The Zorvath Treaty was signed in 1742."),
        rewrite_answer("R7.replace_answer", RuleId::R7, {{"answer", "unknown"}},
                       [](const std::string&) { return std::string("unknown"); }),
        duplicate_call_group(Which::first),
        provenance_edit("R9.blank_seed_id", "seed_id", [](Provenance& p) { return blank(p.seed_id); }),
    };
}

/// Canonical corruptions followed by parameterized variants; indices are stable action ids.
inline std::vector<Corruption> all_corruptions()
{
    using namespace corruption_factory;
    auto out = atomic_corruptions();
    std::vector<Corruption> variants = {
        drop_tag(Which::last, "</think>"),
        drop_tag(Which::first, "<think>"),
        extra_think(Which::first),
        trailing_text(),
        duplicate_tool_turn(Which::last),
        swap_opening(),
        append_user_turn(),
        rename_call(Which::last, ""),
        rename_call(Which::first, "x"),
        unoffer_called_tool(),
        drop_required(Which::last),
        set_query("R4.query_kind@first", 42),
        set_query("R4.empty_query@first", ""),
        unknown_field(),
        rewrite_answer("R5.trailing_newline", RuleId::R5, {{"append", "\n"}},
                       [](const std::string& a) { return a + "\n"; }),
        rewrite_answer("R5.reasoning_prefix", RuleId::R5, {{"prefix", "The answer is "}},
                       [](const std::string& a) { return "The answer is " + a; }),
        rewrite_answer("R5.reasoning_suffix", RuleId::R5, {{"append", " because the documents say so"}},
                       [](const std::string& a) { return a + " because the documents say so"; }),
        fabricate("R6.fabricate@first", Which::first, "The Zorvath Treaty was signed in 1742."),
        fabricate("R6.fabricate_number@last", Which::last, "The archive lists 48213 entries for this topic."),
        fabricate("R6.fabricate_quote@last", Which::last, "It was nicknamed \"Silent Meridian\" by critics."),
        rewrite_answer("R7.replace_entity", RuleId::R7, {{"answer", "Springfield"}},
                       [](const std::string&) { return std::string("Springfield"); }),
        rewrite_answer("R7.truncate", RuleId::R7, {{"drop", "last_word"}},
                       [](const std::string& a) -> std::optional<std::string> {
                           const auto cut = std::string(text::trim(a)).rfind(' ');
                           if (cut == std::string::npos) return std::nullopt;
                           return std::string(text::trim(a)).substr(0, cut);
                       }),
        duplicate_call_group(Which::last),
        drop_call_group(),
        provenance_edit("R9.blank_pattern_id", "pattern_id", [](Provenance& p) { return blank(p.pattern_id); }),
        provenance_edit("R9.clear_tool_ids", "tool_ids", [](Provenance& p) {
            if (p.tool_ids.empty()) return false;
            p.tool_ids.clear();
            return true;
        }),
        provenance_edit("R9.foreign_passage", "gold_passage_ids", [](Provenance& p) {
            if (p.gold_passage_ids.empty()) return false;
            p.gold_passage_ids.front() = "gold:unknown-seed:0";
            return true;
        }),
        provenance_edit("R9.blank_version", "pipeline_version", [](Provenance& p) { return blank(p.pipeline_version); }),
    };
    for (auto& v : variants) out.push_back(std::move(v));
    return out;
}

inline std::optional<std::size_t> find_corruption(const std::vector<Corruption>& all, std::string_view id)
{
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].id == id) return i;
    }
    return std::nullopt;
}

} // namespace toolforge
