#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/error.hpp"

namespace toolforge {

/// Tool-calling paradigm: rounds x tools-per-round.
enum class Paradigm { SRST, SRMT, MRST, MRMT };

inline constexpr std::array<Paradigm, 4> kParadigms = {Paradigm::SRST, Paradigm::SRMT, Paradigm::MRST, Paradigm::MRMT};

inline std::string_view to_string(Paradigm p)
{
    switch (p) {
    case Paradigm::SRST: return "SRST";
    case Paradigm::SRMT: return "SRMT";
    case Paradigm::MRST: return "MRST";
    case Paradigm::MRMT: return "MRMT";
    }
    return "?";
}

inline Paradigm parse_paradigm(std::string_view s)
{
    for (auto p : kParadigms) {
        if (to_string(p) == s) {
            return p;
        }
    }
    throw ParseError("unknown paradigm '" + std::string(s) + "'");
}

inline bool is_multi_round(Paradigm p) { return p == Paradigm::MRST || p == Paradigm::MRMT; }

enum class PerturbationClass { tool_misselection, argument_misselection, tool_switching };
enum class SwitchingCase { A, B };

inline std::string_view to_string(PerturbationClass c)
{
    switch (c) {
    case PerturbationClass::tool_misselection: return "tool_misselection";
    case PerturbationClass::argument_misselection: return "argument_misselection";
    case PerturbationClass::tool_switching: return "tool_switching";
    }
    return "?";
}

inline PerturbationClass parse_perturbation_class(std::string_view s)
{
    if (s == "tool_misselection") return PerturbationClass::tool_misselection;
    if (s == "argument_misselection") return PerturbationClass::argument_misselection;
    if (s == "tool_switching") return PerturbationClass::tool_switching;
    throw ParseError("unknown perturbation class '" + std::string(s) + "'");
}

struct PerturbationEvent {
    PerturbationClass kind = PerturbationClass::tool_misselection;
    std::size_t round = 1;
    std::size_t call_slot = 1;
    std::optional<SwitchingCase> switching_case;

    bool operator==(const PerturbationEvent&) const = default;

    /// Number of calls the slot takes before it receives the correct information:
    /// one erroneous attempt for misselections and case A switches, two for case B.
    std::size_t failed_attempts() const
    {
        return (kind == PerturbationClass::tool_switching && switching_case == SwitchingCase::B) ? 2 : 1;
    }
};

struct InteractionPattern {
    std::string id;
    Paradigm paradigm = Paradigm::SRST;
    std::size_t rounds = 1;
    std::vector<std::size_t> calls_per_round;
    std::vector<PerturbationEvent> perturbations;

    bool operator==(const InteractionPattern&) const = default;

    std::size_t total_calls() const
    {
        std::size_t n = 0;
        for (auto c : calls_per_round) n += c;
        return n;
    }

    const PerturbationEvent* event_at(std::size_t round, std::size_t slot) const
    {
        for (const auto& e : perturbations) {
            if (e.round == round && e.call_slot == slot) {
                return &e;
            }
        }
        return nullptr;
    }
};

struct PatternViolation {
    std::string code;
    std::string detail;
};

/// Checks every pattern invariant; violations are returned, never thrown.
inline std::vector<PatternViolation> validate_pattern(const InteractionPattern& p)
{
    std::vector<PatternViolation> out;
    if (p.id.empty()) {
        out.push_back({"empty-id", "pattern id is empty"});
    }
    if (p.rounds < 1) {
        out.push_back({"no-rounds", "rounds must be at least 1"});
    }
    if (p.calls_per_round.size() != p.rounds) {
        out.push_back({"round-count-mismatch", "calls_per_round has " + std::to_string(p.calls_per_round.size())
                                                   + " entries for " + std::to_string(p.rounds) + " rounds"});
    }
    if (std::any_of(p.calls_per_round.begin(), p.calls_per_round.end(), [](auto c) { return c == 0; })) {
        out.push_back({"empty-round", "every round needs at least one call"});
    }
    const auto& calls = p.calls_per_round;
    const bool all_single = std::all_of(calls.begin(), calls.end(), [](auto c) { return c == 1; });
    const bool some_multi = std::any_of(calls.begin(), calls.end(), [](auto c) { return c >= 2; });
    bool structure_ok = true;
    switch (p.paradigm) {
    case Paradigm::SRST: structure_ok = p.rounds == 1 && calls.size() == 1 && calls[0] == 1; break;
    case Paradigm::SRMT: structure_ok = p.rounds == 1 && calls.size() == 1 && calls[0] >= 2; break;
    case Paradigm::MRST: structure_ok = p.rounds >= 2 && all_single; break;
    case Paradigm::MRMT: structure_ok = p.rounds >= 2 && some_multi; break;
    }
    if (!structure_ok) {
        out.push_back({"paradigm-structure-mismatch",
                       std::string(to_string(p.paradigm)) + " does not allow this round/call structure"});
    }
    std::set<std::pair<std::size_t, std::size_t>> targeted;
    for (const auto& e : p.perturbations) {
        const std::string where = "(" + std::to_string(e.round) + "," + std::to_string(e.call_slot) + ")";
        if (e.round < 1 || e.round > calls.size()) {
            out.push_back({"round-out-of-range", "perturbation at " + where});
            continue;
        }
        if (e.call_slot < 1 || e.call_slot > calls[e.round - 1]) {
            out.push_back({"slot-out-of-range", "perturbation at " + where});
        }
        if ((e.kind == PerturbationClass::tool_switching) != e.switching_case.has_value()) {
            out.push_back({"switching-case-mismatch", "switching_case is set iff the class is tool_switching, at " + where});
        }
        if (e.kind == PerturbationClass::tool_switching && !is_multi_round(p.paradigm)) {
            out.push_back({"switching-single-round", "tool_switching needs a multi-round paradigm, at " + where});
        }
        if (!targeted.insert({e.round, e.call_slot}).second) {
            out.push_back({"duplicate-slot-event", "more than one perturbation at " + where});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Default catalog

namespace detail {

inline InteractionPattern make_pattern(int index, Paradigm paradigm, std::vector<std::size_t> calls,
                                       std::vector<PerturbationEvent> events)
{
    char id[16];
    std::snprintf(id, sizeof id, "flow_%02d", index);
    InteractionPattern p;
    p.id = id;
    p.paradigm = paradigm;
    p.rounds = calls.size();
    p.calls_per_round = std::move(calls);
    p.perturbations = std::move(events);
    return p;
}

inline PerturbationEvent tool_mis(std::size_t r, std::size_t s)
{
    return {PerturbationClass::tool_misselection, r, s, std::nullopt};
}
inline PerturbationEvent arg_mis(std::size_t r, std::size_t s)
{
    return {PerturbationClass::argument_misselection, r, s, std::nullopt};
}
inline PerturbationEvent switching(std::size_t r, std::size_t s, SwitchingCase c)
{
    return {PerturbationClass::tool_switching, r, s, c};
}

} // namespace detail

/// The 29 built-in interaction flows:
///   SRST [1]      clean + 2 single-error
///   SRMT [2]      clean + 4 single-error
///   MRST [1,1]    clean + 4 single-error + 2 switching
///   MRMT [2,2]    clean + 8 single-error + 2 switching + 3 combined-error
inline std::vector<InteractionPattern> default_catalog()
{
    using namespace detail;
    using enum Paradigm;
    std::vector<InteractionPattern> c;
    int i = 1;
    c.push_back(make_pattern(i++, SRST, {1}, {}));
    c.push_back(make_pattern(i++, SRST, {1}, {tool_mis(1, 1)}));
    c.push_back(make_pattern(i++, SRST, {1}, {arg_mis(1, 1)}));

    c.push_back(make_pattern(i++, SRMT, {2}, {}));
    for (std::size_t s = 1; s <= 2; ++s) c.push_back(make_pattern(i++, SRMT, {2}, {tool_mis(1, s)}));
    for (std::size_t s = 1; s <= 2; ++s) c.push_back(make_pattern(i++, SRMT, {2}, {arg_mis(1, s)}));

    c.push_back(make_pattern(i++, MRST, {1, 1}, {}));
    for (std::size_t r = 1; r <= 2; ++r) c.push_back(make_pattern(i++, MRST, {1, 1}, {tool_mis(r, 1)}));
    for (std::size_t r = 1; r <= 2; ++r) c.push_back(make_pattern(i++, MRST, {1, 1}, {arg_mis(r, 1)}));
    c.push_back(make_pattern(i++, MRST, {1, 1}, {switching(2, 1, SwitchingCase::A)}));
    c.push_back(make_pattern(i++, MRST, {1, 1}, {switching(2, 1, SwitchingCase::B)}));

    c.push_back(make_pattern(i++, MRMT, {2, 2}, {}));
    for (std::size_t r = 1; r <= 2; ++r)
        for (std::size_t s = 1; s <= 2; ++s) c.push_back(make_pattern(i++, MRMT, {2, 2}, {tool_mis(r, s)}));
    for (std::size_t r = 1; r <= 2; ++r)
        for (std::size_t s = 1; s <= 2; ++s) c.push_back(make_pattern(i++, MRMT, {2, 2}, {arg_mis(r, s)}));
    c.push_back(make_pattern(i++, MRMT, {2, 2}, {switching(2, 1, SwitchingCase::A)}));
    c.push_back(make_pattern(i++, MRMT, {2, 2}, {switching(2, 2, SwitchingCase::B)}));
    c.push_back(make_pattern(i++, MRMT, {2, 2}, {tool_mis(1, 1), arg_mis(2, 2)}));
    c.push_back(make_pattern(i++, MRMT, {2, 2}, {arg_mis(1, 2), tool_mis(2, 1)}));
    c.push_back(make_pattern(i++, MRMT, {2, 2}, {tool_mis(1, 1), arg_mis(1, 2)}));
    return c;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json pattern_to_json(const InteractionPattern& p)
{
    auto events = nlohmann::json::array();
    for (const auto& e : p.perturbations) {
        nlohmann::json je = {{"class", to_string(e.kind)}, {"round", e.round}, {"call_slot", e.call_slot}};
        if (e.switching_case) {
            je["switching_case"] = *e.switching_case == SwitchingCase::A ? "A" : "B";
        }
        events.push_back(je);
    }
    return {{"id", p.id},
            {"paradigm", to_string(p.paradigm)},
            {"rounds", p.rounds},
            {"calls_per_round", p.calls_per_round},
            {"perturbations", events}};
}

inline InteractionPattern pattern_from_json(const nlohmann::json& j)
{
    try {
        InteractionPattern p;
        p.id = j.at("id").get<std::string>();
        p.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
        p.calls_per_round = j.at("calls_per_round").get<std::vector<std::size_t>>();
        p.rounds = j.value("rounds", p.calls_per_round.size());
        for (const auto& je : j.value("perturbations", nlohmann::json::array())) {
            PerturbationEvent e;
            e.kind = parse_perturbation_class(je.at("class").get<std::string>());
            e.round = je.at("round").get<std::size_t>();
            e.call_slot = je.at("call_slot").get<std::size_t>();
            if (je.contains("switching_case") && !je.at("switching_case").is_null()) {
                const auto c = je.at("switching_case").get<std::string>();
                if (c != "A" && c != "B") {
                    throw ParseError("switching_case must be A or B");
                }
                e.switching_case = c == "A" ? SwitchingCase::A : SwitchingCase::B;
            }
            p.perturbations.push_back(e);
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pattern record: ") + e.what());
    }
}

/// Loads a catalog file and validates every entry; ids must be unique.
inline std::vector<InteractionPattern> catalog_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) {
        throw ParseError("pattern catalog must be a JSON array");
    }
    std::vector<InteractionPattern> out;
    std::set<std::string> ids;
    for (const auto& e : j) {
        auto p = pattern_from_json(e);
        if (const auto v = validate_pattern(p); !v.empty()) {
            throw InvalidPattern(p.id + ": " + v.front().code + " (" + v.front().detail + ")");
        }
        if (!ids.insert(p.id).second) {
            throw InvalidPattern("duplicate pattern id " + p.id);
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<InteractionPattern> load_catalog(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ParseError(path + ": not JSON");
    }
    return catalog_from_json(j);
}

inline nlohmann::json catalog_to_json(const std::vector<InteractionPattern>& catalog)
{
    auto arr = nlohmann::json::array();
    for (const auto& p : catalog) {
        arr.push_back(pattern_to_json(p));
    }
    return arr;
}

inline const InteractionPattern* find_pattern(const std::vector<InteractionPattern>& catalog, std::string_view id)
{
    for (const auto& p : catalog) {
        if (p.id == id) {
            return &p;
        }
    }
    return nullptr;
}

} // namespace toolforge
