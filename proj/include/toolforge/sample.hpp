#pragma once

#include <cstdint>
#include <fstream>
#include <unordered_set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/corpus.hpp"
#include "toolforge/error.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/tool_space.hpp"

namespace toolforge {

inline constexpr const char* kPipelineVersion = "toolforge-0.1.0";

struct Passage {
    std::string id;
    std::string title;
    std::string text;

    bool operator==(const Passage&) const = default;
};

struct SeedTriple {
    std::string id;
    std::string question;
    std::string answer;
    std::vector<Passage> golden_context;
};

inline std::string gold_passage_id(std::string_view seed_id, std::size_t n)
{
    return "gold:" + std::string(seed_id) + ":" + std::to_string(n);
}

struct PlannedCall {
    std::size_t round = 1;
    std::size_t call_slot = 1;
    std::string tool_id;
    nlohmann::json arguments = nlohmann::json::object();
    std::string ref;
};

struct ExecutionTrace {
    std::string pattern_id;
    std::vector<PlannedCall> calls;
    /// Gold passages deliberately left without a call.
    std::vector<std::string> unused;
};

struct InformationPair {
    std::size_t call_index = 0;
    std::string ref;
    std::vector<Passage> good;
    std::vector<Passage> bad;
};

struct DialogueTurn {
    Role role = Role::user;
    std::string content;

    bool operator==(const DialogueTurn&) const = default;
};

struct RequestStamp {
    std::string tag;
    std::uint64_t fingerprint = 0;

    bool operator==(const RequestStamp&) const = default;
};

struct Provenance {
    std::string seed_id;
    std::string pattern_id;
    std::vector<std::string> tool_ids;
    std::vector<std::string> gold_passage_ids;
    std::vector<RequestStamp> requests;
    std::string pipeline_version;
    std::uint64_t run_seed = 0;
};

struct Sample {
    std::string id;
    std::string seed_id;
    std::string pattern_id;
    std::string reference_answer;
    std::vector<VirtualTool> tools_offered;
    std::vector<DialogueTurn> turns;
    std::vector<InformationPair> info_pairs;
    Provenance provenance;
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json passage_to_json(const Passage& p)
{
    return {{"id", p.id}, {"title", p.title}, {"text", p.text}};
}

inline Passage passage_from_json(const nlohmann::json& j)
{
    return {j.value("id", std::string{}), j.value("title", std::string{}), j.at("text").get<std::string>()};
}

inline nlohmann::json passages_to_json(const std::vector<Passage>& ps)
{
    auto arr = nlohmann::json::array();
    for (const auto& p : ps) arr.push_back(passage_to_json(p));
    return arr;
}

inline std::vector<Passage> passages_from_json(const nlohmann::json& j)
{
    std::vector<Passage> out;
    for (const auto& e : j) out.push_back(passage_from_json(e));
    return out;
}

inline nlohmann::json seed_to_json(const SeedTriple& s)
{
    auto ctx = nlohmann::json::array();
    for (const auto& p : s.golden_context) {
        ctx.push_back({{"title", p.title}, {"text", p.text}});
    }
    return {{"id", s.id}, {"question", s.question}, {"answer", s.answer}, {"golden_context", ctx}};
}

/// Parses and checks one seed record; passages receive their gold:<seed>:<n> ids.
inline SeedTriple seed_from_json(const nlohmann::json& j)
{
    SeedTriple s;
    try {
        s.id = j.at("id").get<std::string>();
        s.question = j.at("question").get<std::string>();
        s.answer = j.at("answer").get<std::string>();
        for (const auto& p : j.at("golden_context")) {
            s.golden_context.push_back(
                {gold_passage_id(s.id, s.golden_context.size()), p.value("title", std::string{}), p.at("text").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSeed(std::string("seed record: ") + e.what());
    }
    if (s.id.empty()) {
        throw InvalidSeed("empty seed id");
    }
    if (text::is_blank(s.question) || text::is_blank(s.answer)) {
        throw InvalidSeed(s.id + ": question and answer must be non-empty");
    }
    if (s.golden_context.empty()) {
        throw InvalidSeed(s.id + ": no golden context");
    }
    for (const auto& p : s.golden_context) {
        if (text::is_blank(p.text)) {
            throw InvalidSeed(s.id + ": blank golden passage " + p.id);
        }
    }
    return s;
}

inline std::vector<SeedTriple> load_seeds_jsonl(std::istream& in, const std::string& source = "<seeds>")
{
    std::vector<SeedTriple> seeds;
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": not JSON");
        }
        auto s = seed_from_json(j);
        if (!ids.insert(s.id).second) {
            throw InvalidSeed(source + ":" + std::to_string(line_no) + ": duplicate seed id " + s.id);
        }
        seeds.push_back(std::move(s));
    }
    return seeds;
}

inline std::vector<SeedTriple> load_seeds_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return load_seeds_jsonl(in, path);
}

/// Gold passages as corpus documents, so augmentation can retrieve them.
inline std::vector<Document> gold_documents(const std::vector<SeedTriple>& seeds)
{
    std::vector<Document> docs;
    for (const auto& s : seeds) {
        for (const auto& p : s.golden_context) {
            docs.push_back({p.id, p.title, p.text});
        }
    }
    return docs;
}

inline nlohmann::json call_to_json(const PlannedCall& c)
{
    return {{"round", c.round}, {"slot", c.call_slot}, {"tool", c.tool_id}, {"arguments", c.arguments}, {"ref", c.ref}};
}

inline nlohmann::json trace_to_json(const ExecutionTrace& t)
{
    auto calls = nlohmann::json::array();
    for (const auto& c : t.calls) calls.push_back(call_to_json(c));
    return {{"pattern_id", t.pattern_id}, {"calls", calls}, {"unused", t.unused}};
}

inline nlohmann::json info_pair_to_json(const InformationPair& p)
{
    return {{"call_index", p.call_index}, {"ref", p.ref}, {"good", passages_to_json(p.good)}, {"bad", passages_to_json(p.bad)}};
}

inline InformationPair info_pair_from_json(const nlohmann::json& j)
{
    return {j.at("call_index").get<std::size_t>(), j.at("ref").get<std::string>(), passages_from_json(j.at("good")),
            passages_from_json(j.at("bad"))};
}

inline nlohmann::json provenance_to_json(const Provenance& p)
{
    auto requests = nlohmann::json::array();
    for (const auto& r : p.requests) {
        requests.push_back({{"tag", r.tag}, {"fingerprint", to_hex(r.fingerprint)}});
    }
    return {{"seed_id", p.seed_id},
            {"pattern_id", p.pattern_id},
            {"tool_ids", p.tool_ids},
            {"gold_passage_ids", p.gold_passage_ids},
            {"requests", requests},
            {"pipeline_version", p.pipeline_version},
            {"run_seed", p.run_seed}};
}

inline Provenance provenance_from_json(const nlohmann::json& j)
{
    Provenance p;
    p.seed_id = j.value("seed_id", std::string{});
    p.pattern_id = j.value("pattern_id", std::string{});
    p.tool_ids = j.value("tool_ids", std::vector<std::string>{});
    p.gold_passage_ids = j.value("gold_passage_ids", std::vector<std::string>{});
    for (const auto& r : j.value("requests", nlohmann::json::array())) {
        p.requests.push_back({r.at("tag").get<std::string>(), parse_hex(r.at("fingerprint").get<std::string>()).value_or(0)});
    }
    p.pipeline_version = j.value("pipeline_version", std::string{});
    p.run_seed = j.value("run_seed", std::uint64_t{0});
    return p;
}

inline nlohmann::json sample_to_json(const Sample& s)
{
    auto messages = nlohmann::json::array();
    for (const auto& t : s.turns) {
        messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    }
    auto pairs = nlohmann::json::array();
    for (const auto& p : s.info_pairs) pairs.push_back(info_pair_to_json(p));
    return {{"id", s.id},
            {"seed_id", s.seed_id},
            {"pattern_id", s.pattern_id},
            {"reference_answer", s.reference_answer},
            {"tools", tools_to_json(s.tools_offered)},
            {"messages", messages},
            {"info_pairs", pairs},
            {"provenance", provenance_to_json(s.provenance)}};
}

inline Sample sample_from_json(const nlohmann::json& j)
{
    try {
        Sample s;
        s.id = j.at("id").get<std::string>();
        s.seed_id = j.value("seed_id", std::string{});
        s.pattern_id = j.value("pattern_id", std::string{});
        s.reference_answer = j.value("reference_answer", std::string{});
        for (const auto& t : j.value("tools", nlohmann::json::array())) {
            s.tools_offered.push_back(tool_from_json(t));
        }
        for (const auto& m : j.at("messages")) {
            s.turns.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
        }
        for (const auto& p : j.value("info_pairs", nlohmann::json::array())) {
            s.info_pairs.push_back(info_pair_from_json(p));
        }
        s.provenance = provenance_from_json(j.value("provenance", nlohmann::json::object()));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sample record: ") + e.what());
    }
}

inline std::vector<Sample> load_samples_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::vector<Sample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": not JSON");
        }
        // benchmark items and mined negatives wrap the sample; take it out so they load too
        out.push_back(sample_from_json(j.is_object() && j.contains("sample") ? j["sample"] : j));
    }
    return out;
}

} // namespace toolforge
