#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/assistant_format.hpp"
#include "toolforge/error.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/patterns.hpp"
#include "toolforge/prompts.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/text.hpp"
#include "toolforge/tool_space.hpp"

namespace toolforge {

enum class RuleId { R1, R2, R3, R4, R5, R6, R7, R8, R9 };
enum class RuleDimension { format_structure, tool_protocol, dialogue_correctness, traceability };

inline constexpr std::array<RuleId, 9> kRules = {RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4, RuleId::R5,
                                                 RuleId::R6, RuleId::R7, RuleId::R8, RuleId::R9};

inline std::size_t rule_index(RuleId r) { return static_cast<std::size_t>(r); }

inline std::string to_string(RuleId r) { return "R" + std::to_string(rule_index(r) + 1); }

inline RuleId parse_rule(std::string_view s)
{
    for (auto r : kRules) {
        if (to_string(r) == s) return r;
    }
    throw ParseError("unknown rule '" + std::string(s) + "'");
}

inline RuleDimension dimension(RuleId r)
{
    switch (r) {
    case RuleId::R1:
    case RuleId::R2:
    case RuleId::R5: return RuleDimension::format_structure;
    case RuleId::R3:
    case RuleId::R4: return RuleDimension::tool_protocol;
    case RuleId::R6:
    case RuleId::R7:
    case RuleId::R8: return RuleDimension::dialogue_correctness;
    case RuleId::R9: return RuleDimension::traceability;
    }
    return RuleDimension::traceability;
}

inline std::string_view to_string(RuleDimension d)
{
    switch (d) {
    case RuleDimension::format_structure: return "format_structure";
    case RuleDimension::tool_protocol: return "tool_protocol";
    case RuleDimension::dialogue_correctness: return "dialogue_correctness";
    case RuleDimension::traceability: return "traceability";
    }
    return "?";
}

struct RuleOutcome {
    bool pass = true;
    std::string detail;

    bool operator==(const RuleOutcome&) const = default;
};

struct RuleReport {
    std::array<RuleOutcome, 9> results{};

    const RuleOutcome& operator[](RuleId r) const { return results[rule_index(r)]; }
    bool passed() const
    {
        return std::all_of(results.begin(), results.end(), [](const auto& o) { return o.pass; });
    }
    std::size_t pass_count() const
    {
        return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const auto& o) { return o.pass; }));
    }
    bool operator==(const RuleReport&) const = default;
};

/// Seed facts the traceability and answer rules resolve against.
class SeedRegistry {
public:
    SeedRegistry() = default;
    explicit SeedRegistry(const std::vector<SeedTriple>& seeds)
    {
        for (const auto& s : seeds) {
            auto& e = entries_[s.id];
            e.answer = s.answer;
            for (const auto& p : s.golden_context) e.passages.insert(p.id);
        }
    }

    struct Entry {
        std::string answer;
        std::set<std::string> passages;
    };

    const Entry* find(const std::string& id) const
    {
        const auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, Entry> entries_;
};

/// Sources the rule layer resolves against. Missing sources fall back to what the sample
/// itself carries (offered tools, reference answer) and to the default catalog.
struct ValidationContext {
    const ToolSet* toolset = nullptr;
    const std::vector<InteractionPattern>* catalog = nullptr;
    const SeedRegistry* seeds = nullptr;
};

namespace rules {

inline RuleOutcome fail(std::string detail) { return {false, std::move(detail)}; }

inline std::vector<std::size_t> assistant_turns(const Sample& s)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.turns.size(); ++i) {
        if (s.turns[i].role == Role::assistant) out.push_back(i);
    }
    return out;
}

/// Lenient scans of the assistant turns, computed once per rule check.
class TurnScans {
public:
    explicit TurnScans(const Sample& s) : scans_(s.turns.size())
    {
        for (std::size_t i = 0; i < s.turns.size(); ++i) {
            if (s.turns[i].role == Role::assistant) scans_[i] = scan_assistant_turn(s.turns[i].content);
        }
    }

    const ScannedAssistantTurn& at(std::size_t turn) const { return *scans_.at(turn); }

private:
    std::vector<std::optional<ScannedAssistantTurn>> scans_;
};

inline RuleOutcome tag_wellformedness(const Sample& s)
{
    for (auto i : assistant_turns(s)) {
        const auto parsed = parse_assistant_turn(s.turns[i].content);
        if (!parsed.think) return fail("turn " + std::to_string(i) + ": missing or unclosed <think> block");
        if (parsed.think_blocks != 1) return fail("turn " + std::to_string(i) + ": expected exactly one <think> block");
        if (!text::is_blank(parsed.residue)) return fail("turn " + std::to_string(i) + ": unrecognized content");
        if (parsed.tool_calls.empty() && !parsed.answer) return fail("turn " + std::to_string(i) + ": no call or answer");
    }
    return {};
}

inline RuleOutcome turn_structure(const Sample& s, const TurnScans& scans)
{
    const auto& t = s.turns;
    if (t.size() < 3 || t[0].role != Role::system || t[1].role != Role::user) {
        return fail("dialogue must open with a system turn and a user turn");
    }
    std::size_t i = 2;
    while (i < t.size()) {
        if (t[i].role != Role::assistant) return fail("turn " + std::to_string(i) + ": expected an assistant turn");
        const auto& scan = scans.at(i);
        const auto calls = scan.tool_calls.size();
        if (calls == 0) {
            if (i + 1 != t.size()) return fail("turn " + std::to_string(i) + ": assistant turn without calls before the end");
            if (!scan.answer) return fail("final assistant turn carries no answer");
            return {};
        }
        for (std::size_t k = 1; k <= calls; ++k) {
            if (i + k >= t.size() || t[i + k].role != Role::tool) {
                return fail("turn " + std::to_string(i) + ": " + std::to_string(calls) + " calls need as many tool turns");
            }
        }
        i += calls + 1;
        if (i < t.size() && t[i].role == Role::tool) {
            return fail("turn " + std::to_string(i) + ": tool turn without a matching call");
        }
    }
    return fail("dialogue ends without a final answer");
}

inline RuleOutcome tool_existence(const Sample& s, const TurnScans& scans)
{
    for (auto i : assistant_turns(s)) {
        for (const auto& c : scans.at(i).tool_calls) {
            if (!c.valid) return fail("turn " + std::to_string(i) + ": unreadable tool call");
            const bool offered = std::any_of(s.tools_offered.begin(), s.tools_offered.end(),
                                             [&](const auto& t) { return t.name == c.name; });
            if (!offered) return fail("turn " + std::to_string(i) + ": unknown tool '" + c.name + "'");
        }
    }
    return {};
}

inline RuleOutcome argument_protocol(const Sample& s, const TurnScans& scans)
{
    for (auto i : assistant_turns(s)) {
        for (const auto& c : scans.at(i).tool_calls) {
            const auto tool = std::find_if(s.tools_offered.begin(), s.tools_offered.end(),
                                           [&](const auto& t) { return t.name == c.name; });
            if (!c.valid || tool == s.tools_offered.end()) continue;
            const std::string where = "turn " + std::to_string(i) + " " + c.name + ": ";
            for (const auto& [key, value] : c.arguments.items()) {
                const auto* spec = tool->parameter(key);
                if (!spec) return fail(where + "unknown field '" + key + "'");
                if (!kind_matches(spec->kind, value)) return fail(where + "field '" + key + "' has the wrong kind");
            }
            for (const auto& p : tool->parameters) {
                if (p.required && !c.arguments.contains(p.name)) return fail(where + "missing required field '" + p.name + "'");
            }
            const auto* q = tool->query_parameter();
            if (q && c.arguments.contains(q->name)
                && (!c.arguments[q->name].is_string() || text::is_blank(c.arguments[q->name].get<std::string>()))) {
                return fail(where + "empty query argument");
            }
        }
    }
    return {};
}

inline std::optional<std::string> final_answer(const Sample& s, const TurnScans& scans)
{
    const auto turns = assistant_turns(s);
    if (turns.empty()) return std::nullopt;
    return scans.at(turns.back()).answer;
}

inline RuleOutcome answer_purity(const Sample& s, const TurnScans& scans)
{
    const auto answer = final_answer(s, scans);
    if (!answer) return {};
    if (text::is_blank(*answer)) return fail("empty answer");
    if (answer->find_first_of("<>\n") != std::string::npos) return fail("answer contains markup or line breaks");
    const auto tokens = text::tokenize(*answer);
    const auto lower = " " + text::join(tokens, " ") + " ";
    for (const char* marker : {" because ", " therefore ", " i think ", " answer is ", " based on ", " reasoning "}) {
        if (lower.find(marker) != std::string::npos) return fail("answer contains reasoning text");
    }
    return {};
}

inline bool asserts_fact(std::string_view sentence)
{
    if (std::any_of(sentence.begin(), sentence.end(), [](char c) { return c >= '0' && c <= '9'; })) return true;
    if (text::contains(sentence, "\"") || text::contains(sentence, "“")) return true;
    bool first = true;
    std::size_t pos = 0;
    while (pos < sentence.size()) {
        while (pos < sentence.size() && text::is_space(static_cast<unsigned char>(sentence[pos]))) ++pos;
        const auto end = std::min(sentence.find(' ', pos), sentence.size());
        auto word = sentence.substr(pos, end - pos);
        pos = end;
        while (!word.empty() && !text::is_word_char(static_cast<unsigned char>(word.front()))
               && static_cast<unsigned char>(word.front()) < 0x80) {
            word.remove_prefix(1);
        }
        if (word.empty()) continue;
        const bool capital = word.front() >= 'A' && word.front() <= 'Z';
        if (!first && capital && word != "I" && !word.starts_with("I'")) return true;
        first = false;
    }
    return false;
}

inline bool contains_ngram(const std::vector<std::string>& haystack, const std::vector<std::string>& gram)
{
    if (gram.empty() || haystack.size() < gram.size()) return false;
    return std::search(haystack.begin(), haystack.end(), gram.begin(), gram.end()) != haystack.end();
}

inline RuleOutcome grounding(const Sample& s, const TurnScans& scans)
{
    std::vector<std::vector<std::string>> evidence;
    for (std::size_t i = 0; i < s.turns.size() && i < 2; ++i) {
        if (s.turns[i].role == Role::user) evidence.push_back(text::content_tokens(s.turns[i].content));
    }
    std::vector<std::string> names;
    for (const auto& t : s.tools_offered) names.push_back(t.name);
    std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

    for (std::size_t i = 2; i < s.turns.size(); ++i) {
        const auto& turn = s.turns[i];
        if (turn.role == Role::tool || turn.role == Role::user) {
            evidence.push_back(text::content_tokens(turn.content));
            continue;
        }
        if (turn.role != Role::assistant) continue;
        auto scan = scans.at(i);
        for (const auto& c : scan.tool_calls) {
            if (!c.name.empty()) scan.think = text::replace_all(scan.think, c.name, " ");
        }
        for (const auto& n : names) scan.think = text::replace_all(scan.think, n, " ");
        for (const auto& sentence : text::split_sentences(scan.think)) {
            if (!asserts_fact(sentence)) continue;
            const auto tokens = text::content_tokens(sentence);
            if (tokens.empty()) continue;
            const std::size_t n = std::min<std::size_t>(4, tokens.size());
            bool grounded = false;
            for (std::size_t k = 0; k + n <= tokens.size() && !grounded; ++k) {
                const std::vector<std::string> gram(tokens.begin() + static_cast<std::ptrdiff_t>(k),
                                                    tokens.begin() + static_cast<std::ptrdiff_t>(k + n));
                grounded = std::any_of(evidence.begin(), evidence.end(),
                                       [&](const auto& e) { return contains_ngram(e, gram); });
            }
            if (!grounded) return fail("turn " + std::to_string(i) + ": ungrounded statement \"" + sentence + "\"");
        }
    }
    return {};
}

inline RuleOutcome answer_consistency(const Sample& s, const TurnScans& scans, const ValidationContext& ctx)
{
    std::string expected = s.reference_answer;
    if (ctx.seeds) {
        if (const auto* e = ctx.seeds->find(s.seed_id)) expected = e->answer;
    }
    const auto answer = final_answer(s, scans);
    if (!answer) return fail("no final answer");
    if (text::normalize_answer(*answer) != text::normalize_answer(expected) || text::normalize_answer(expected).empty()) {
        return fail("answer '" + *answer + "' does not match the seed answer");
    }
    return {};
}

/// Attempts per slot the pattern implies, in round-major slot order.
inline std::vector<std::vector<std::size_t>> chain_lengths(const InteractionPattern& p)
{
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t r = 1; r <= p.calls_per_round.size(); ++r) {
        std::vector<std::size_t> round;
        for (std::size_t s = 1; s <= p.calls_per_round[r - 1]; ++s) {
            const auto* e = p.event_at(r, s);
            round.push_back(1 + (e ? e->failed_attempts() : 0));
        }
        out.push_back(std::move(round));
    }
    return out;
}

/// Call counts of the assistant turns a pattern realizes, ending with the answer turn's 0.
inline std::vector<std::size_t> expected_call_counts(const InteractionPattern& p)
{
    std::vector<std::size_t> out;
    for (const auto& round : chain_lengths(p)) {
        const auto depth = *std::max_element(round.begin(), round.end());
        for (std::size_t j = 0; j < depth; ++j) {
            out.push_back(static_cast<std::size_t>(std::count_if(round.begin(), round.end(), [&](auto l) { return l > j; })));
        }
    }
    out.push_back(0);
    return out;
}

inline RuleOutcome pattern_conformance(const Sample& s, const TurnScans& scans, const ValidationContext& ctx)
{
    static const auto fallback = default_catalog();
    const auto& catalog = ctx.catalog ? *ctx.catalog : fallback;
    const auto* p = find_pattern(catalog, s.pattern_id);
    if (!p) return fail("unknown pattern '" + s.pattern_id + "'");

    std::vector<const ScannedAssistantTurn*> turn_scans;
    std::vector<std::size_t> realized;
    for (auto i : assistant_turns(s)) {
        turn_scans.push_back(&scans.at(i));
        realized.push_back(turn_scans.back()->tool_calls.size());
    }
    if (realized != expected_call_counts(*p)) return fail("call structure differs from " + p->id);

    std::size_t turn = 0;
    for (std::size_t r = 1; r <= p->calls_per_round.size(); ++r) {
        const auto lengths = chain_lengths(*p)[r - 1];
        const auto depth = *std::max_element(lengths.begin(), lengths.end());
        std::vector<std::vector<const ToolCall*>> chains(lengths.size());
        for (std::size_t j = 0; j < depth; ++j, ++turn) {
            std::size_t k = 0;
            for (std::size_t slot = 0; slot < lengths.size(); ++slot) {
                if (lengths[slot] > j) chains[slot].push_back(&turn_scans[turn]->tool_calls[k++]);
            }
            if (j + 1 < depth && text::is_blank(turn_scans[turn + 1]->think)) {
                return fail("round " + std::to_string(r) + ": failed attempt without a reflection");
            }
        }
        for (std::size_t slot = 0; slot < lengths.size(); ++slot) {
            const auto* e = p->event_at(r, slot + 1);
            if (!e) continue;
            const auto& c = chains[slot];
            const std::string where = "round " + std::to_string(r) + " slot " + std::to_string(slot + 1) + ": ";
            switch (e->kind) {
            case PerturbationClass::tool_misselection:
                if (c[0]->name == c[1]->name) return fail(where + "misselection keeps the same tool");
                break;
            case PerturbationClass::argument_misselection:
                if (c[0]->name != c[1]->name) return fail(where + "argument correction changes the tool");
                if (c[0]->arguments == c[1]->arguments) return fail(where + "argument correction keeps the arguments");
                break;
            case PerturbationClass::tool_switching:
                if (c[0]->name == c[1]->name) return fail(where + "switch keeps the same tool");
                if (e->switching_case == SwitchingCase::B && c[2]->name != c[0]->name) {
                    return fail(where + "switch does not return to the original tool");
                }
                break;
            }
        }
    }
    return {};
}

inline RuleOutcome traceability(const Sample& s, const ValidationContext& ctx)
{
    static const auto fallback = default_catalog();
    const auto& p = s.provenance;
    if (p.seed_id.empty()) return fail("provenance has no seed id");
    if (p.seed_id != s.seed_id) return fail("provenance seed id differs from the sample");
    const SeedRegistry::Entry* seed = ctx.seeds ? ctx.seeds->find(p.seed_id) : nullptr;
    if (ctx.seeds && !seed) return fail("seed '" + p.seed_id + "' is unknown");
    if (p.pattern_id.empty() || p.pattern_id != s.pattern_id) return fail("provenance pattern id missing or inconsistent");
    if (!find_pattern(ctx.catalog ? *ctx.catalog : fallback, p.pattern_id)) {
        return fail("pattern '" + p.pattern_id + "' is unknown");
    }
    if (p.tool_ids.empty()) return fail("provenance lists no tools");
    for (const auto& id : p.tool_ids) {
        const bool known = ctx.toolset ? ctx.toolset->contains(id)
                                       : std::any_of(s.tools_offered.begin(), s.tools_offered.end(),
                                                     [&](const auto& t) { return t.id == id; });
        if (!known) return fail("tool '" + id + "' does not resolve");
    }
    if (p.gold_passage_ids.empty()) return fail("provenance lists no golden passages");
    const std::string prefix = "gold:" + p.seed_id + ":";
    for (const auto& id : p.gold_passage_ids) {
        const bool known = seed ? seed->passages.contains(id) : id.starts_with(prefix) && id.size() > prefix.size();
        if (!known) return fail("golden passage '" + id + "' does not resolve");
    }
    if (p.pipeline_version.empty()) return fail("provenance has no pipeline version");
    return {};
}

} // namespace rules

/// All nine rules, always evaluated in full.
inline RuleReport rule_check(const Sample& sample, const ValidationContext& ctx = {})
{
    RuleReport r;
    const rules::TurnScans scans(sample);
    r.results[0] = rules::tag_wellformedness(sample);
    r.results[1] = rules::turn_structure(sample, scans);
    r.results[2] = rules::tool_existence(sample, scans);
    r.results[3] = rules::argument_protocol(sample, scans);
    r.results[4] = rules::answer_purity(sample, scans);
    r.results[5] = rules::grounding(sample, scans);
    r.results[6] = rules::answer_consistency(sample, scans, ctx);
    r.results[7] = rules::pattern_conformance(sample, scans, ctx);
    r.results[8] = rules::traceability(sample, ctx);
    return r;
}

// ---------------------------------------------------------------------------
// Model verification layer

struct PrincipleOutcome {
    bool pass = true;
    std::string rationale;
};

struct SemanticVerdict {
    std::array<PrincipleOutcome, 3> principles{};

    bool passed() const
    {
        return std::all_of(principles.begin(), principles.end(), [](const auto& p) { return p.pass; });
    }
};

inline ChatRequest judge_request(const Sample& sample, std::size_t principle)
{
    auto messages = nlohmann::json::array();
    for (const auto& t : sample.turns) {
        messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    }
    const nlohmann::json payload = {{"sample_id", sample.id}, {"messages", messages}};
    const std::string instructions = "Principle: " + std::string(kPrinciples[principle].statement)
                                     + "\nReply with PASS or FAIL on the first line, then a one-sentence rationale.";
    return task_request("judge:principle-" + std::to_string(principle + 1), kJudgeSystem, instructions, payload, 512);
}

inline PrincipleOutcome parse_judgement(std::string_view completion)
{
    const auto tokens_end = completion.size();
    for (std::size_t pos = 0; pos < tokens_end;) {
        while (pos < tokens_end && !std::isalpha(static_cast<unsigned char>(completion[pos]))) ++pos;
        std::size_t end = pos;
        while (end < tokens_end && std::isalpha(static_cast<unsigned char>(completion[end]))) ++end;
        const auto word = completion.substr(pos, end - pos);
        if (word == "PASS" || word == "FAIL") {
            return {word == "PASS", std::string(text::trim(completion.substr(end)))};
        }
        pos = end;
    }
    throw JudgeParseError("judge completion has no PASS/FAIL verdict");
}

/// One judge request per principle; the verdict is their conjunction.
inline SemanticVerdict model_verify(const Sample& sample, const ChatBackend& backend)
{
    SemanticVerdict v;
    for (std::size_t i = 0; i < kPrinciples.size(); ++i) {
        v.principles[i] = parse_judgement(backend.chat(judge_request(sample, i)));
    }
    return v;
}

enum class ValidationMode { rule_only, full };

struct ValidationReport {
    RuleReport rule;
    std::optional<SemanticVerdict> semantic;
    bool accepted = false;
};

inline ValidationReport validate(const Sample& sample, const ValidationContext& ctx, const ChatBackend* backend,
                                 ValidationMode mode)
{
    ValidationReport report;
    report.rule = rule_check(sample, ctx);
    if (!report.rule.passed()) {
        return report;
    }
    if (mode == ValidationMode::full) {
        if (!backend) {
            throw BadRequest("full validation needs a judge backend");
        }
        report.semantic = model_verify(sample, *backend);
    }
    report.accepted = !report.semantic || report.semantic->passed();
    return report;
}

inline nlohmann::json report_to_json(const std::string& sample_id, const ValidationReport& report)
{
    nlohmann::json rules = nlohmann::json::object();
    for (auto r : kRules) {
        const auto& o = report.rule[r];
        rules[to_string(r)] = o.pass ? nlohmann::json("pass") : nlohmann::json{{"fail", o.detail}};
    }
    nlohmann::json semantic = nullptr;
    if (report.semantic) {
        semantic = nlohmann::json::object();
        for (std::size_t i = 0; i < kPrinciples.size(); ++i) {
            const auto& p = report.semantic->principles[i];
            semantic[std::string(kPrinciples[i].key)] = p.pass ? nlohmann::json("pass") : nlohmann::json{{"fail", p.rationale}};
        }
    }
    return {{"sample_id", sample_id}, {"rules", rules}, {"semantic", semantic}, {"accepted", report.accepted}};
}

} // namespace toolforge
