#pragma once

// Random score tables for the three plan-selection stages, checked against an exhaustive scan
// and against a strictly increasing transform of every score.

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "toolforge/planning.hpp"

namespace plan_tables {

using namespace toolforge;

inline std::vector<VirtualTool> pool_tools(std::size_t n)
{
    std::vector<VirtualTool> out;
    for (std::size_t i = 0; i < n; ++i) {
        VirtualTool t;
        t.id = t.name = "tool_" + std::to_string(i);
        t.description = "looks up topic " + std::to_string(i);
        t.parameters = {{"query", ParamKind::string, "q", true, ParamRole::query}};
        out.push_back(t);
    }
    return out;
}

struct Outcome {
    std::size_t violations = 0;
    std::string detail;
};

inline TableScorer transformed(const TableScorer& s)
{
    auto f = [](double x) { return std::exp(x) + x * x * x - 7.0; };
    TableScorer out;
    for (const auto& [k, v] : s.sequences) out.sequences[k] = f(v);
    for (const auto& [k, v] : s.paradigms) out.paradigms[k] = f(v);
    for (const auto& [k, v] : s.rationales) out.rationales[k] = f(v);
    out.fallback = f(s.fallback);
    return out;
}

/// One random table: small integer scores so ties are common.
inline Outcome check_one(std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    const std::size_t n_tools = 1 + g() % 3;
    const auto tools = pool_tools(n_tools);
    const ToolShortlister shortlister(tools);
    const auto catalog = default_catalog();
    PlanOptions options;
    options.shortlist_size = n_tools;
    options.max_length = 1 + g() % 3;

    TableScorer scorer;
    scorer.fallback = -100;
    const auto sequences = enumerate_sequences(shortlister.shortlist("topic", n_tools), options.max_length);
    std::vector<std::pair<ToolSequence, double>> seq_table;
    for (const auto& s : sequences) {
        const double v = static_cast<double>(g() % 4) - 1.5;
        scorer.sequences[sequence_id(s)] = v;
        seq_table.push_back({s, v});
    }
    std::vector<std::pair<std::string, double>> par_table;
    for (auto p : kParadigms) {
        const double v = static_cast<double>(g() % 3) * 0.5;
        scorer.paradigms[std::string(to_string(p))] = v;
        par_table.push_back({std::string(to_string(p)), v});
    }
    std::vector<std::pair<std::string, double>> rat_table;
    for (const char* id : {"decompose", "verify"}) {
        const double v = static_cast<double>(g() % 2);
        scorer.rationales[id] = v;
        rat_table.push_back({id, v});
    }

    Outcome out;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) {
            ++out.violations;
            out.detail += what + "; ";
        }
    };
    const auto plan = select_plan("topic", shortlister, catalog, scorer, options);
    expect(plan.sequence == oracle::best(seq_table), "sequence");
    expect(std::string(to_string(plan.paradigm)) == oracle::best(par_table), "paradigm");
    expect(plan.rationale.id == oracle::best(rat_table), "rationale");
    expect(plan.sequence_scores.size() == sequences.size() && plan.paradigm_scores.size() == 4
               && plan.rationale_scores.size() == 2,
           "stage scores");

    const auto again = select_plan("topic", shortlister, catalog, transformed(scorer), options);
    expect(again.sequence == plan.sequence, "sequence under transform");
    expect(again.paradigm == plan.paradigm, "paradigm under transform");
    expect(again.rationale == plan.rationale, "rationale under transform");
    return out;
}

} // namespace plan_tables
