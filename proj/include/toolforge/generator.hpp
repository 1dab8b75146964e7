#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/assistant_format.hpp"
#include "toolforge/corpus.hpp"
#include "toolforge/error.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/patterns.hpp"
#include "toolforge/planning.hpp"
#include "toolforge/prompts.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/tool_space.hpp"

namespace toolforge {

/// A stage failure tagged with the pipeline phase it happened in.
class PhaseError : public Error {
public:
    PhaseError(std::string phase, const std::string& what) : Error(phase + ": " + what), phase_(std::move(phase)) {}
    const std::string& phase() const noexcept { return phase_; }

private:
    std::string phase_;
};

// ---------------------------------------------------------------------------
// Phase 1: planning

inline ChatRequest planning_request(const SeedTriple& seed, const PlanSelection& plan, const InteractionPattern& pattern,
                                    const ToolSet& toolset, std::size_t attempt)
{
    auto tools = nlohmann::json::array();
    std::set<std::string> seen;
    for (const auto& id : plan.sequence) {
        if (const auto* t = toolset.find(id); t && seen.insert(id).second) {
            tools.push_back(tool_to_json(*t));
        }
    }
    const nlohmann::json payload = {
        {"question", seed.question},
        {"answer", seed.answer},
        {"rationale", rationale_to_json(plan.rationale)},
        {"paradigm", to_string(plan.paradigm)},
        {"pattern", {{"id", pattern.id}, {"calls_per_round", pattern.calls_per_round}}},
        {"sequence", plan.sequence},
        {"tools", tools},
        {"passages", passages_to_json(seed.golden_context)},
        {"attempt", attempt},
    };
    return task_request("planning", kPlannerSystem, kPlannerInstructions, payload);
}

/// Parses a <trace> completion and checks it against the seed, tool set and pattern.
inline ExecutionTrace parse_trace(std::string_view completion, const SeedTriple& seed, const InteractionPattern& pattern,
                                  const ToolSet& toolset)
{
    const auto block = text::extract_block(completion, "trace");
    if (!block) {
        throw PlanParseError("completion has no <trace> block");
    }
    const auto j = nlohmann::json::parse(*block, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("calls") || !j["calls"].is_array()) {
        throw PlanParseError("trace block is not an object with a calls array");
    }
    std::set<std::string> gold;
    for (const auto& p : seed.golden_context) gold.insert(p.id);

    ExecutionTrace trace;
    trace.pattern_id = pattern.id;
    for (const auto& c : j["calls"]) {
        if (!c.is_object()) throw PlanParseError("call entry is not an object");
        const auto get_index = [&](const char* key) -> std::size_t {
            if (!c.contains(key) || !c[key].is_number_unsigned()) {
                throw PlanParseError(std::string("call lacks a positive '") + key + "'");
            }
            return c[key].get<std::size_t>();
        };
        PlannedCall call;
        call.round = get_index("round");
        call.call_slot = get_index("slot");
        if (!c.contains("tool") || !c["tool"].is_string()) throw PlanParseError("call lacks a tool");
        call.tool_id = c["tool"].get<std::string>();
        if (!c.contains("arguments") || !c["arguments"].is_object()) throw PlanParseError("call lacks arguments");
        call.arguments = c["arguments"];
        if (!c.contains("ref") || !c["ref"].is_string() || c["ref"].get<std::string>().empty()) {
            throw PlanParseError("call at round " + std::to_string(call.round) + " slot "
                                 + std::to_string(call.call_slot) + " has no ref");
        }
        call.ref = c["ref"].get<std::string>();
        const auto* tool = toolset.find(call.tool_id);
        if (!tool) throw PlanParseError("unknown tool '" + call.tool_id + "'");
        if (text::is_blank(query_of(*tool, call.arguments))) throw PlanParseError("empty query argument for " + call.tool_id);
        if (!gold.contains(call.ref)) throw PlanParseError("ref '" + call.ref + "' is not a golden passage");
        trace.calls.push_back(std::move(call));
    }
    for (const auto& u : j.value("unused", nlohmann::json::array())) {
        if (!u.is_string() || !gold.contains(u.get<std::string>())) throw PlanParseError("bad unused entry");
        trace.unused.push_back(u.get<std::string>());
    }

    // Structure: round-major order, slots 1..m per round, matching the pattern.
    std::size_t i = 0;
    for (std::size_t r = 1; r <= pattern.calls_per_round.size(); ++r) {
        for (std::size_t s = 1; s <= pattern.calls_per_round[r - 1]; ++s, ++i) {
            if (i >= trace.calls.size() || trace.calls[i].round != r || trace.calls[i].call_slot != s) {
                throw StructureMismatch("trace does not follow the " + pattern.id + " call structure");
            }
        }
    }
    if (i != trace.calls.size()) {
        throw StructureMismatch("trace has more calls than " + pattern.id + " declares");
    }
    for (const auto& id : gold) {
        const bool referenced = std::any_of(trace.calls.begin(), trace.calls.end(), [&](const auto& c) { return c.ref == id; });
        const bool unused = std::find(trace.unused.begin(), trace.unused.end(), id) != trace.unused.end();
        if (!referenced && !unused) throw PlanParseError("golden passage " + id + " is neither referenced nor unused");
    }
    return trace;
}

inline ExecutionTrace plan_trace(const SeedTriple& seed, const PlanSelection& plan, const InteractionPattern& pattern,
                                 const ToolSet& toolset, const ChatBackend& backend, std::size_t attempt = 0,
                                 std::vector<RequestStamp>* stamps = nullptr)
{
    if (plan.paradigm != pattern.paradigm) {
        throw StructureMismatch("plan paradigm " + std::string(to_string(plan.paradigm)) + " does not match "
                                + pattern.id);
    }
    const auto request = planning_request(seed, plan, pattern, toolset, attempt);
    if (stamps) stamps->push_back({request.tag, fingerprint(request.messages)});
    return parse_trace(backend.chat(request), seed, pattern, toolset);
}

// ---------------------------------------------------------------------------
// Phase 2: augmentation

/// Per call: distractors K_i = top-k of the query excluding ref_i; good = K_i plus ref_i at a
/// seeded position, bad = K_i.
inline std::vector<InformationPair> augment(const ExecutionTrace& trace, const SeedTriple& seed, const ToolSet& toolset,
                                            const CorpusIndex& index, std::size_t k, std::uint64_t run_seed)
{
    std::vector<InformationPair> pairs;
    for (std::size_t i = 0; i < trace.calls.size(); ++i) {
        const auto& call = trace.calls[i];
        const auto* tool = toolset.find(call.tool_id);
        const std::string query = tool ? query_of(*tool, call.arguments) : std::string{};
        InformationPair pair;
        pair.call_index = i;
        pair.ref = call.ref;
        for (const auto& hit : rank_all(index, query)) {
            if (pair.bad.size() >= k) break;
            if (hit.document->id == call.ref) continue;
            pair.bad.push_back({hit.document->id, hit.document->title, hit.document->body});
        }
        const auto gold = std::find_if(seed.golden_context.begin(), seed.golden_context.end(),
                                       [&](const Passage& p) { return p.id == call.ref; });
        Passage ref = gold != seed.golden_context.end() ? *gold : Passage{call.ref, "", ""};
        Rng rng(mix64(Fnv1a64{}.u64(run_seed).bytes(seed.id).byte(0x1F).u64(i).value()));
        const auto at = static_cast<std::ptrdiff_t>(rng.below(pair.bad.size() + 1));
        pair.good = pair.bad;
        pair.good.insert(pair.good.begin() + at, std::move(ref));
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Phase 3: dialogue generation

struct ScriptedCall {
    std::size_t trace_index = 0;
    std::size_t round = 1;
    std::size_t slot = 1;
    std::size_t attempt = 0;
    bool final = true;
    std::optional<PerturbationEvent> perturbation;
    ToolCall call;
};

struct ScriptedStep {
    std::size_t round = 1;
    std::vector<ScriptedCall> calls;
};

struct DialogueScript {
    std::vector<ScriptedStep> steps;

    std::size_t call_count() const
    {
        std::size_t n = 0;
        for (const auto& s : steps) n += s.calls.size();
        return n;
    }
};

namespace detail {

inline const VirtualTool& other_tool(std::span<const VirtualTool> offered, const VirtualTool& avoid, std::size_t salt)
{
    std::vector<const VirtualTool*> same_domain, other_domain;
    for (const auto& t : offered) {
        if (t.id == avoid.id) continue;
        (t.domain != avoid.domain ? other_domain : same_domain).push_back(&t);
    }
    const auto& pool = other_domain.empty() ? same_domain : other_domain;
    if (pool.empty()) {
        throw PhaseError("generation", "no alternative to '" + avoid.name + "' among the offered tools");
    }
    return *pool[salt % pool.size()];
}

inline std::string wrong_query(const std::string& question, const std::string& correct)
{
    auto tokens = text::content_tokens(question);
    if (tokens.size() > 3) tokens.resize(3);
    std::string q = tokens.empty() ? "general information" : text::join(tokens, " ");
    if (text::lowercase(q) == text::lowercase(correct)) q += " overview";
    return q;
}

} // namespace detail

/// Expands the clean trace into the attempt chains the pattern declares.
inline DialogueScript build_script(const SeedTriple& seed, const ExecutionTrace& trace,
                                   const InteractionPattern& pattern, std::span<const VirtualTool> offered)
{
    auto find = [&](const std::string& id) -> const VirtualTool& {
        for (const auto& t : offered) {
            if (t.id == id) return t;
        }
        throw PhaseError("generation", "tool '" + id + "' is not offered");
    };

    DialogueScript script;
    std::size_t index = 0;
    for (std::size_t r = 1; r <= pattern.calls_per_round.size(); ++r) {
        std::vector<std::vector<ScriptedCall>> chains;
        for (std::size_t s = 1; s <= pattern.calls_per_round[r - 1]; ++s, ++index) {
            const auto& planned = trace.calls.at(index);
            const auto& tool = find(planned.tool_id);
            const std::string query = query_of(tool, planned.arguments);
            const PerturbationEvent* event = pattern.event_at(r, s);
            std::vector<ToolCall> attempts;
            if (!event) {
                attempts = {{tool.name, planned.arguments}};
            } else if (event->kind == PerturbationClass::tool_misselection) {
                const auto& wrong = detail::other_tool(offered, tool, index);
                attempts = {{wrong.name, fill_arguments(wrong, query)}, {tool.name, planned.arguments}};
            } else if (event->kind == PerturbationClass::argument_misselection) {
                auto bad_args = planned.arguments;
                bad_args[tool.query_parameter()->name] = detail::wrong_query(seed.question, query);
                attempts = {{tool.name, bad_args}, {tool.name, planned.arguments}};
            } else {
                const auto& alt = detail::other_tool(offered, tool, index + 1);
                attempts = {{tool.name, planned.arguments}, {alt.name, fill_arguments(alt, query)}};
                if (event->switching_case == SwitchingCase::B) {
                    attempts.push_back({tool.name, planned.arguments});
                }
            }
            std::vector<ScriptedCall> chain;
            for (std::size_t a = 0; a < attempts.size(); ++a) {
                ScriptedCall sc;
                sc.trace_index = index;
                sc.round = r;
                sc.slot = s;
                sc.attempt = a;
                sc.final = a + 1 == attempts.size();
                if (event) sc.perturbation = *event;
                sc.call = std::move(attempts[a]);
                chain.push_back(std::move(sc));
            }
            chains.push_back(std::move(chain));
        }
        std::size_t depth = 0;
        for (const auto& c : chains) depth = std::max(depth, c.size());
        for (std::size_t j = 0; j < depth; ++j) {
            ScriptedStep step;
            step.round = r;
            for (const auto& c : chains) {
                if (j < c.size()) step.calls.push_back(c[j]);
            }
            script.steps.push_back(std::move(step));
        }
    }
    return script;
}

inline nlohmann::json script_to_json(const DialogueScript& script, const ExecutionTrace& trace)
{
    auto steps = nlohmann::json::array();
    for (const auto& step : script.steps) {
        auto calls = nlohmann::json::array();
        for (const auto& c : step.calls) {
            nlohmann::json jc = {{"name", c.call.name},     {"arguments", c.call.arguments},
                                 {"slot", c.slot},          {"attempt", c.attempt},
                                 {"outcome", c.final ? "ok" : "failed"}, {"ref", trace.calls[c.trace_index].ref}};
            if (c.perturbation) {
                jc["perturbation"] = to_string(c.perturbation->kind);
                if (c.perturbation->switching_case) {
                    jc["switching_case"] = *c.perturbation->switching_case == SwitchingCase::A ? "A" : "B";
                }
            }
            calls.push_back(std::move(jc));
        }
        steps.push_back({{"round", step.round}, {"calls", calls}});
    }
    return steps;
}

inline ChatRequest dialogue_request(const SeedTriple& seed, const ExecutionTrace& trace, const InteractionPattern& pattern,
                                    const DialogueScript& script, std::size_t attempt)
{
    auto refs = nlohmann::json::array();
    std::set<std::string> seen;
    for (const auto& c : trace.calls) {
        if (!seen.insert(c.ref).second) continue;
        for (const auto& p : seed.golden_context) {
            if (p.id == c.ref) refs.push_back(passage_to_json(p));
        }
    }
    const nlohmann::json payload = {
        {"question", seed.question},
        {"answer", seed.answer},
        {"paradigm", to_string(pattern.paradigm)},
        {"pattern_id", pattern.id},
        {"steps", script_to_json(script, trace)},
        {"passages", refs},
        {"attempt", attempt},
    };
    return task_request("dialogue", kWriterSystem, kWriterInstructions, payload, 8192);
}

/// Splits a writer completion into assistant turns and tool placeholders.
inline std::vector<DialogueTurn> parse_dialogue_completion(std::string_view completion)
{
    std::vector<DialogueTurn> turns;
    std::size_t pos = 0;
    auto skip = [&] { pos = detail::skip_space(completion, pos); };
    skip();
    while (pos < completion.size()) {
        constexpr std::string_view open = "<turn role=\"";
        if (!detail::starts_with_at(completion, pos, open)) {
            throw DialogueParseError("unexpected text outside <turn> blocks");
        }
        pos += open.size();
        const auto quote = completion.find('"', pos);
        if (quote == std::string_view::npos) throw DialogueParseError("unterminated role attribute");
        const auto role_name = completion.substr(pos, quote - pos);
        pos = quote + 1;
        if (role_name == "tool" && detail::starts_with_at(completion, pos, "/>")) {
            turns.push_back({Role::tool, ""});
            pos += 2;
        } else if (role_name == "assistant" && detail::starts_with_at(completion, pos, ">")) {
            const auto end = completion.find("</turn>", pos + 1);
            if (end == std::string_view::npos) throw DialogueParseError("unterminated assistant turn");
            turns.push_back({Role::assistant, std::string(text::trim(completion.substr(pos + 1, end - pos - 1)))});
            pos = end + 7;
        } else {
            throw DialogueParseError("unsupported turn '" + std::string(role_name) + "'");
        }
        skip();
    }
    if (turns.empty()) throw DialogueParseError("completion holds no turns");
    return turns;
}

/// Builds the full dialogue: system and user turns, the writer's assistant turns, and tool
/// turns filled from the information pairs (bad for failed attempts, good otherwise).
inline std::vector<DialogueTurn> generate_dialogue(const SeedTriple& seed, const ExecutionTrace& trace,
                                                   const std::vector<InformationPair>& pairs,
                                                   const InteractionPattern& pattern, const DialogueScript& script,
                                                   std::span<const VirtualTool> offered, const ChatBackend& backend,
                                                   std::size_t attempt = 0, std::vector<RequestStamp>* stamps = nullptr)
{
    if (pairs.size() != trace.calls.size()) {
        throw DialogueParseError("information pairs do not align with the trace");
    }
    const auto request = dialogue_request(seed, trace, pattern, script, attempt);
    if (stamps) stamps->push_back({request.tag, fingerprint(request.messages)});
    const auto written = parse_dialogue_completion(backend.chat(request));

    std::vector<const ScriptedCall*> flat;
    for (const auto& step : script.steps) {
        for (const auto& c : step.calls) flat.push_back(&c);
    }

    std::vector<DialogueTurn> turns{{Role::system, system_prompt(offered)}, {Role::user, user_prompt(seed.question)}};
    std::size_t pending = 0;
    std::size_t next_call = 0;
    for (const auto& t : written) {
        if (t.role == Role::tool) {
            if (pending == 0) throw DialogueParseError("tool turn without a preceding tool call");
            if (next_call >= flat.size()) throw DialogueParseError("more tool calls than the script declares");
            const auto& sc = *flat[next_call++];
            const auto& pair = pairs[sc.trace_index];
            turns.push_back({Role::tool, render_tool_result(sc.final ? pair.good : pair.bad)});
            --pending;
            continue;
        }
        if (pending != 0) throw DialogueParseError("assistant turn before every call received its tool turn");
        pending = scan_assistant_turn(t.content).tool_calls.size();
        turns.push_back(t);
    }
    if (pending != 0) throw DialogueParseError("dialogue ends with unanswered tool calls");
    if (next_call != flat.size()) throw DialogueParseError("dialogue realizes fewer calls than the script declares");
    return turns;
}

// ---------------------------------------------------------------------------
// Phase 4: assembly

inline std::string sample_id(std::string_view seed_id, std::string_view pattern_id, std::uint64_t run_seed)
{
    return "s-" + to_hex(Fnv1a64{}.bytes(seed_id).byte(0x1F).bytes(pattern_id).byte(0x1F).u64(run_seed).value());
}

inline Sample assemble(std::vector<DialogueTurn> turns, std::vector<InformationPair> pairs, const SeedTriple& seed,
                       const InteractionPattern& pattern, std::vector<VirtualTool> offered, std::uint64_t run_seed,
                       std::vector<RequestStamp> stamps = {})
{
    if (turns.size() < 3 || turns[0].role != Role::system || turns[1].role != Role::user) {
        throw AssemblyError("system-user-prefix");
    }
    if (turns.back().role != Role::assistant || !scan_assistant_turn(turns.back().content).answer) {
        throw AssemblyError("no-final-answer");
    }
    for (std::size_t i = 2; i < turns.size(); ++i) {
        if (turns[i].role == Role::tool && turns[i - 1].role != Role::tool
            && (turns[i - 1].role != Role::assistant || scan_assistant_turn(turns[i - 1].content).tool_calls.empty())) {
            throw AssemblyError("orphan-tool-turn");
        }
    }
    for (const auto& p : pairs) {
        if (p.good.size() != p.bad.size() + 1) throw AssemblyError("pair-discipline");
        std::size_t extra = 0;
        for (const auto& g : p.good) {
            if (std::find(p.bad.begin(), p.bad.end(), g) == p.bad.end()) {
                if (g.id != p.ref) throw AssemblyError("pair-discipline");
                ++extra;
            }
        }
        if (extra != 1) throw AssemblyError("pair-discipline");
    }

    Sample s;
    s.id = sample_id(seed.id, pattern.id, run_seed);
    s.seed_id = seed.id;
    s.pattern_id = pattern.id;
    s.reference_answer = seed.answer;
    s.turns = std::move(turns);
    s.info_pairs = std::move(pairs);
    s.provenance.seed_id = seed.id;
    s.provenance.pattern_id = pattern.id;
    for (const auto& t : s.turns) {
        if (t.role != Role::assistant) continue;
        for (const auto& c : scan_assistant_turn(t.content).tool_calls) {
            const auto it = std::find_if(offered.begin(), offered.end(), [&](const auto& v) { return v.name == c.name; });
            if (it != offered.end()
                && std::find(s.provenance.tool_ids.begin(), s.provenance.tool_ids.end(), it->id) == s.provenance.tool_ids.end()) {
                s.provenance.tool_ids.push_back(it->id);
            }
        }
    }
    for (const auto& p : seed.golden_context) s.provenance.gold_passage_ids.push_back(p.id);
    s.provenance.requests = std::move(stamps);
    s.provenance.pipeline_version = kPipelineVersion;
    s.provenance.run_seed = run_seed;
    s.tools_offered = std::move(offered);
    return s;
}

// ---------------------------------------------------------------------------
// End to end

/// Scores candidates toward a pattern fixed in advance by the route mix: sequences whose
/// length equals the pattern's call count, better-ranked tools first, few repeats.
class PatternGuidedScorer final : public CandidateScorer {
public:
    PatternGuidedScorer(const InteractionPattern& pattern, std::vector<std::string> shortlist)
        : pattern_(pattern), shortlist_(std::move(shortlist))
    {}

    double score_sequence(const std::string&, const ToolSequence& sequence) const override
    {
        const double target = static_cast<double>(pattern_.total_calls());
        double score = -std::abs(static_cast<double>(sequence.size()) - target);
        std::set<std::string> distinct(sequence.begin(), sequence.end());
        score -= 0.1 * static_cast<double>(sequence.size() - distinct.size());
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            const auto it = std::find(shortlist_.begin(), shortlist_.end(), sequence[i]);
            const auto rank = static_cast<double>(it - shortlist_.begin());
            score -= 0.01 * rank / static_cast<double>(sequence.size()) * (1.0 + 0.001 * static_cast<double>(i));
        }
        return score;
    }

    double score_paradigm(const std::string&, const ToolSequence&, Paradigm p) const override
    {
        return p == pattern_.paradigm ? 1.0 : 0.0;
    }

    double score_rationale(const std::string&, const ToolSequence&, Paradigm p, const ReasoningRationale& r) const override
    {
        return (r.id == "decompose") == is_multi_round(p) ? 1.0 : 0.5;
    }

private:
    const InteractionPattern& pattern_;
    std::vector<std::string> shortlist_;
};

struct SynthesisContext {
    const ToolSet* toolset = nullptr;
    const ToolShortlister* shortlister = nullptr;
    const std::vector<InteractionPattern>* catalog = nullptr;
    const CorpusIndex* corpus = nullptr;
    std::size_t augmentation_k = 5;
    PlanOptions plan{};
    std::uint64_t run_seed = 0;
};

/// Tools shown to the model: the shortlist plus every tool the trace uses.
inline std::vector<VirtualTool> offered_tools(const PlanSelection& plan, const ToolSet& toolset)
{
    std::vector<VirtualTool> out;
    auto add = [&](const std::string& id) {
        if (std::any_of(out.begin(), out.end(), [&](const auto& t) { return t.id == id; })) return;
        if (const auto* t = toolset.find(id)) out.push_back(*t);
    };
    for (const auto& id : plan.shortlist) add(id);
    for (const auto& id : plan.sequence) add(id);
    return out;
}

/// select_plan -> plan_trace -> augment -> generate_dialogue -> assemble for one seed on a
/// pattern fixed in advance. Failures surface as PhaseError.
inline Sample synthesize(const SeedTriple& seed, const InteractionPattern& pattern, const SynthesisContext& ctx,
                         const ChatBackend& backend, std::size_t attempt = 0)
{
    auto phase = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const PhaseError&) {
            throw;
        } catch (const std::exception& e) {
            throw PhaseError(name, e.what());
        }
    };
    std::vector<RequestStamp> stamps;
    const auto plan = phase("selection", [&] {
        const auto shortlist = ctx.shortlister->shortlist(seed.question, ctx.plan.shortlist_size);
        const PatternGuidedScorer scorer(pattern, shortlist);
        return select_plan(seed.question, *ctx.shortlister, *ctx.catalog, scorer, ctx.plan);
    });
    const auto trace = phase("planning", [&] { return plan_trace(seed, plan, pattern, *ctx.toolset, backend, attempt, &stamps); });
    auto pairs = phase("augmentation", [&] { return augment(trace, seed, *ctx.toolset, *ctx.corpus, ctx.augmentation_k, ctx.run_seed); });
    auto offered = offered_tools(plan, *ctx.toolset);
    auto turns = phase("generation", [&] {
        const auto script = build_script(seed, trace, pattern, offered);
        return generate_dialogue(seed, trace, pairs, pattern, script, offered, backend, attempt, &stamps);
    });
    return phase("assembly", [&] {
        return assemble(std::move(turns), std::move(pairs), seed, pattern, std::move(offered), ctx.run_seed, std::move(stamps));
    });
}

} // namespace toolforge
