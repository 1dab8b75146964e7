#pragma once

// Deterministic stand-in for the generator and judge models. It reads the JSON payload of
// each pipeline prompt and writes a completion in the expected document format, so the
// whole pipeline runs offline. Output depends only on the request.

#include <array>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/assistant_format.hpp"
#include "toolforge/error.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/prompts.hpp"
#include "toolforge/rewrites.hpp"
#include "toolforge/text.hpp"
#include "toolforge/tool_space.hpp"

namespace toolforge {

class SimulatedBackend final : public ChatBackend {
public:
    std::string chat(const ChatRequest& request) const override
    {
        request.validate();
        const auto payload = task_payload(request);
        if (request.tag.starts_with("judge:")) {
            return "PASS\nThe dialogue satisfies this principle.";
        }
        if (payload.is_null()) {
            throw ScriptMiss("simulated backend needs an <input> payload for tag '" + request.tag + "'");
        }
        try {
            if (request.tag == "variant") return variant(payload);
            if (request.tag == "planning") return planning(payload);
            if (request.tag == "dialogue") return dialogue(payload);
            if (request.tag.starts_with("violation:principle-")) return violation(request.tag, payload);
        } catch (const nlohmann::json::exception& e) {
            throw BadRequest(std::string("simulated backend cannot read the payload: ") + e.what());
        }
        throw ScriptMiss("simulated backend has no handler for tag '" + request.tag + "'");
    }

private:
    static std::string rewrite_words(std::string s, std::size_t index)
    {
        static const std::vector<std::vector<std::string>> groups = {
            {"Searches", "Looks up", "Queries", "Scans", "Browses", "Explores", "Surveys"},
            {"returns", "retrieves", "surfaces", "fetches", "yields", "brings back"},
            {"passages", "documents", "articles", "excerpts", "snippets", "entries"},
            {"sources", "references", "records", "archives", "collections"},
            {"about", "covering", "concerning", "on", "related to"},
        };
        std::size_t k = index;
        for (const auto& g : groups) {
            const std::size_t pick = k % g.size();
            k = k / g.size() + index + 1;
            for (const auto& word : g) {
                const auto pos = s.find(word);
                if (pos != std::string::npos) {
                    s.replace(pos, word.size(), g[pick]);
                    break;
                }
            }
        }
        return s;
    }

    static std::string variant(const nlohmann::json& payload)
    {
        static const std::array<const char*, 20> suffixes = {
            "lookup", "finder",  "explorer", "navigator", "retriever", "scout",   "atlas",
            "digest", "probe",   "compass",  "lens",      "ledger",    "radar",   "beacon",
            "almanac", "gazette", "archive", "chronicle", "register",  "survey"};
        auto tool = tool_from_json(payload.at("base_tool"));
        const auto index = payload.at("variant_index").get<std::size_t>();
        std::string name = tool.name + "_" + suffixes[index % suffixes.size()];
        for (std::size_t round = index / suffixes.size(); round > 0; round /= 26) {
            name += "_";
            name += static_cast<char>('a' + (round - 1) % 26);
        }
        tool.id = name;
        tool.name = name;
        tool.description = rewrite_words(tool.description, index);
        for (auto& p : tool.parameters) {
            p.description = rewrite_words(p.description, index + 3);
        }
        auto j = tool_to_json(tool);
        j.erase("base_id");
        return "<variant>\n" + j.dump(2) + "\n</variant>";
    }

    static std::string planning(const nlohmann::json& payload)
    {
        const auto sequence = payload.at("sequence").get<std::vector<std::string>>();
        const auto calls_per_round = payload.at("pattern").at("calls_per_round").get<std::vector<std::size_t>>();
        std::vector<VirtualTool> tools;
        for (const auto& t : payload.at("tools")) tools.push_back(tool_from_json(t));
        const auto& passages = payload.at("passages");
        if (sequence.empty() || passages.empty()) {
            throw BadRequest("planning payload needs a sequence and passages");
        }

        auto calls = nlohmann::json::array();
        std::size_t i = 0;
        for (std::size_t r = 1; r <= calls_per_round.size(); ++r) {
            for (std::size_t s = 1; s <= calls_per_round[r - 1]; ++s, ++i) {
                const auto& tool_id = sequence[i % sequence.size()];
                const auto it = std::find_if(tools.begin(), tools.end(), [&](const auto& t) { return t.id == tool_id; });
                if (it == tools.end()) throw BadRequest("tool " + tool_id + " missing from planning payload");
                const auto& passage = passages[i % passages.size()];
                std::string query = passage.value("title", std::string{});
                if (text::is_blank(query)) {
                    auto tokens = text::content_tokens(passage.at("text").get<std::string>());
                    if (tokens.size() > 6) tokens.resize(6);
                    query = text::join(tokens, " ");
                }
                calls.push_back({{"round", r},
                                 {"slot", s},
                                 {"tool", tool_id},
                                 {"arguments", fill_arguments(*it, query)},
                                 {"ref", passage.at("id")}});
            }
        }
        auto unused = nlohmann::json::array();
        for (std::size_t p = i; p < passages.size(); ++p) unused.push_back(passages[p].at("id"));
        return "<trace>\n" + nlohmann::json{{"calls", calls}, {"unused", unused}}.dump(2) + "\n</trace>";
    }

    // Plays the rewriter by applying the scripted rewrite for the requested principle.
    static std::string violation(const std::string& tag, const nlohmann::json& payload)
    {
        const auto principle = std::stoul(tag.substr(tag.rfind('-') + 1)) - 1;
        const auto r = rewrite::scripted(sample_from_json(payload.at("sample")), principle);
        if (!r) return "This sample leaves no room for that flaw.";
        return "<sample>\n" + sample_to_json(*r).dump() + "\n</sample>";
    }

    static std::string first_sentence(const std::string& passage_text)
    {
        const auto sentences = text::split_sentences(passage_text);
        return sentences.empty() ? std::string{} : sentences.front();
    }

    static std::string reflection(const nlohmann::json& call)
    {
        const auto kind = call.value("perturbation", std::string{});
        if (kind == "tool_misselection") {
            return "The previous result does not address this sub-problem because the selected tool was not suited "
                   "to it, so I will call a more appropriate tool.";
        }
        if (kind == "argument_misselection") {
            return "The previous result is off target because the query argument was not specific enough, so I will "
                   "correct the arguments and call the tool again.";
        }
        if (call.value("attempt", 0) == 0) {
            return "The result from that tool was not useful, so I will switch to a different tool for this step.";
        }
        return "That alternative did not help either, so I will return to the original tool with a refined call.";
    }

    /// Sentences reacting to the results of `previous`, in call order.
    static std::string analysis(const nlohmann::json& previous, const nlohmann::json& passages)
    {
        std::string out;
        std::set<std::string> quoted;
        bool analyzed = false;
        for (const auto& c : previous.at("calls")) {
            if (c.at("outcome") == "failed") {
                out += " " + reflection(c);
                continue;
            }
            const auto ref = c.at("ref").get<std::string>();
            if (!quoted.insert(ref).second) continue;
            for (const auto& p : passages) {
                if (p.at("id") != ref) continue;
                const auto sentence = first_sentence(p.at("text").get<std::string>());
                if (sentence.empty()) continue;
                if (!analyzed) {
                    out += " Analyzing the tool result.";
                    analyzed = true;
                }
                out += " " + sentence;
            }
        }
        return out;
    }

    static std::string dialogue(const nlohmann::json& payload)
    {
        const auto& steps = payload.at("steps");
        const auto& passages = payload.at("passages");
        const bool multi_hop = payload.at("paradigm") == "MRST" || payload.at("paradigm") == "MRMT";
        std::string out;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            std::string think;
            if (i == 0) {
                think = multi_hop ? "This is a multi-hop question, so I will decompose it into sub-problems solved "
                                    "through iterative tool calls. The result of each step informs the next "
                                    "sub-problem, and all retrieved information will be aggregated into the final answer."
                                  : "This is a single-hop question, so only a single round of tool calling is necessary.";
            } else {
                think = std::string(text::trim(analysis(steps[i - 1], passages)));
                if (steps[i].at("round") != steps[i - 1].at("round")) {
                    think += " This result helps construct the next sub-problem.";
                }
            }
            std::vector<ToolCall> calls;
            std::vector<std::string> names;
            for (const auto& c : steps[i].at("calls")) {
                calls.push_back({c.at("name").get<std::string>(), c.at("arguments")});
                names.push_back(calls.back().name);
            }
            think += " I will now call " + text::join(names, " and ") + ".";
            think += " Reflection check: the tool selection and parameters described here match the calls below.";
            out += "<turn role=\"assistant\">" + render_assistant_turn(think, calls) + "</turn>\n";
            for (std::size_t k = 0; k < calls.size(); ++k) out += "<turn role=\"tool\"/>\n";
        }
        std::string think = steps.empty() ? std::string{} : std::string(text::trim(analysis(steps.back(), passages)));
        think += " I have gathered sufficient information to conclude.";
        think += " Reflection check: the analysis supports the final answer and the answer is consistent with it.";
        out += "<turn role=\"assistant\">"
               + render_answer_turn(text::trim(think), payload.at("answer").get<std::string>()) + "</turn>\n";
        return out;
    }
};

} // namespace toolforge
