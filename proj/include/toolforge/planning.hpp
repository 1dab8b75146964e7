#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/corpus.hpp"
#include "toolforge/error.hpp"
#include "toolforge/patterns.hpp"
#include "toolforge/tool_space.hpp"

namespace toolforge {

enum class PlanStage { sequence, paradigm, rationale };

struct ReasoningRationale {
    std::string id;
    std::vector<std::string> steps;
    std::string final_synthesis;

    bool operator==(const ReasoningRationale&) const = default;
};

using ToolSequence = std::vector<std::string>;

struct StageScore {
    std::string candidate;
    double score = 0.0;
};

struct PlanSelection {
    /// Tool ids the sequence candidates were drawn from, best match first.
    std::vector<std::string> shortlist;
    ToolSequence sequence;
    Paradigm paradigm = Paradigm::SRST;
    ReasoningRationale rationale;
    std::vector<StageScore> sequence_scores;
    std::vector<StageScore> paradigm_scores;
    std::vector<StageScore> rationale_scores;
};

/// Realizes the three conditional scores. Implementations must be deterministic.
class CandidateScorer {
public:
    virtual ~CandidateScorer() = default;
    virtual double score_sequence(const std::string& question, const ToolSequence& sequence) const = 0;
    virtual double score_paradigm(const std::string& question, const ToolSequence& sequence, Paradigm paradigm) const = 0;
    virtual double score_rationale(const std::string& question, const ToolSequence& sequence, Paradigm paradigm,
                                   const ReasoningRationale& rationale) const = 0;
};

inline std::string sequence_id(const ToolSequence& s)
{
    return "[" + text::join(s, ",") + "]";
}

/// Score table keyed by candidate id; unknown candidates score `fallback`.
class TableScorer final : public CandidateScorer {
public:
    std::map<std::string, double> sequences;
    std::map<std::string, double> paradigms;
    std::map<std::string, double> rationales;
    double fallback = 0.0;

    double score_sequence(const std::string&, const ToolSequence& sequence) const override
    {
        return lookup(sequences, sequence_id(sequence));
    }
    double score_paradigm(const std::string&, const ToolSequence&, Paradigm p) const override
    {
        return lookup(paradigms, std::string(to_string(p)));
    }
    double score_rationale(const std::string&, const ToolSequence&, Paradigm, const ReasoningRationale& r) const override
    {
        return lookup(rationales, r.id);
    }

private:
    double lookup(const std::map<std::string, double>& m, const std::string& key) const
    {
        const auto it = m.find(key);
        return it == m.end() ? fallback : it->second;
    }
};

/// Index of the best-scoring candidate; equal scores go to the smaller key.
template <class Key>
std::size_t argmax_by(const std::vector<double>& scores, const std::vector<Key>& keys)
{
    if (scores.empty()) {
        throw EmptyCandidateSet("argmax over nothing");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best] || (scores[i] == scores[best] && keys[i] < keys[best])) {
            best = i;
        }
    }
    return best;
}

struct PlanOptions {
    std::size_t shortlist_size = 6;
    std::size_t max_length = 4;
};

/// BM25 index over tool descriptions, built once per tool set.
class ToolShortlister {
public:
    ToolShortlister(std::span<const VirtualTool> tools, Bm25Params params = {})
    {
        if (tools.empty()) {
            throw EmptyCandidateSet("empty tool set");
        }
        std::vector<Document> docs;
        for (const auto& t : tools) {
            ids_.push_back(t.id);
            docs.push_back({t.id, "", t.description + " " + text::replace_all(t.name, "_", " ")});
        }
        std::sort(ids_.begin(), ids_.end());
        index_.emplace(std::move(docs), params);
    }

    /// Top-n tool ids by BM25 of the question against descriptions; ids fill any shortfall.
    std::vector<std::string> shortlist(std::string_view question, std::size_t n) const
    {
        std::vector<std::string> out;
        for (const auto& hit : retrieve_top_k(*index_, question, n)) {
            out.push_back(hit.document->id);
        }
        for (const auto& id : ids_) {
            if (out.size() >= n) {
                break;
            }
            if (std::find(out.begin(), out.end(), id) == out.end()) {
                out.push_back(id);
            }
        }
        return out;
    }

private:
    std::vector<std::string> ids_;
    std::optional<CorpusIndex> index_;
};

/// All tuples of length 1..max_length over `pool` (repeats allowed), in lexicographic order
/// of the pool positions.
inline std::vector<ToolSequence> enumerate_sequences(const std::vector<std::string>& pool, std::size_t max_length)
{
    std::vector<ToolSequence> out;
    if (pool.empty()) {
        return out;
    }
    for (std::size_t len = 1; len <= max_length; ++len) {
        std::vector<std::size_t> digits(len, 0);
        while (true) {
            ToolSequence s;
            for (auto d : digits) s.push_back(pool[d]);
            out.push_back(std::move(s));
            std::size_t i = len;
            while (i > 0 && ++digits[i - 1] == pool.size()) {
                digits[i - 1] = 0;
                --i;
            }
            if (i == 0) {
                break;
            }
        }
    }
    return out;
}

/// Candidate rationales for a fixed (sequence, paradigm): one step per planned call.
inline std::vector<ReasoningRationale> candidate_rationales(const std::string& question, const ToolSequence& sequence,
                                                            Paradigm paradigm)
{
    (void)question;
    const bool multi_hop = is_multi_round(paradigm);
    ReasoningRationale decompose{"decompose", {}, {}};
    ReasoningRationale verify{"verify", {}, {}};
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        decompose.steps.push_back("use " + sequence[i] + " to resolve sub-problem " + std::to_string(i + 1)
                                  + (multi_hop && i > 0 ? " using the previous result" : ""));
        verify.steps.push_back("use " + sequence[i] + " to gather evidence and check it against the question");
    }
    decompose.final_synthesis = "combine the sub-problem results into the final answer";
    verify.final_synthesis = "answer once the gathered evidence agrees";
    return {decompose, verify};
}

/// Sequential argmax: tool sequence, then paradigm given the sequence, then rationale given both.
inline PlanSelection select_plan(const std::string& question, const ToolShortlister& tools,
                                 const std::vector<InteractionPattern>& catalog, const CandidateScorer& scorer,
                                 const PlanOptions& options = {})
{
    if (catalog.empty()) {
        throw EmptyCandidateSet("empty pattern catalog");
    }
    PlanSelection plan;

    plan.shortlist = tools.shortlist(question, options.shortlist_size);
    const auto sequences = enumerate_sequences(plan.shortlist, options.max_length);
    if (sequences.empty()) {
        throw EmptyCandidateSet("no candidate tool sequences");
    }
    std::vector<double> scores;
    for (const auto& s : sequences) {
        scores.push_back(scorer.score_sequence(question, s));
        plan.sequence_scores.push_back({sequence_id(s), scores.back()});
    }
    plan.sequence = sequences[argmax_by(scores, sequences)];

    std::vector<Paradigm> paradigms;
    for (auto p : kParadigms) {
        if (std::any_of(catalog.begin(), catalog.end(), [&](const auto& pat) { return pat.paradigm == p; })) {
            paradigms.push_back(p);
        }
    }
    std::vector<std::string> paradigm_keys;
    scores.clear();
    for (auto p : paradigms) {
        scores.push_back(scorer.score_paradigm(question, plan.sequence, p));
        paradigm_keys.emplace_back(to_string(p));
        plan.paradigm_scores.push_back({paradigm_keys.back(), scores.back()});
    }
    plan.paradigm = paradigms[argmax_by(scores, paradigm_keys)];

    const auto rationales = candidate_rationales(question, plan.sequence, plan.paradigm);
    std::vector<std::string> rationale_keys;
    scores.clear();
    for (const auto& r : rationales) {
        scores.push_back(scorer.score_rationale(question, plan.sequence, plan.paradigm, r));
        rationale_keys.push_back(r.id);
        plan.rationale_scores.push_back({r.id, scores.back()});
    }
    plan.rationale = rationales[argmax_by(scores, rationale_keys)];
    return plan;
}

inline nlohmann::json rationale_to_json(const ReasoningRationale& r)
{
    return {{"id", r.id}, {"steps", r.steps}, {"final_synthesis", r.final_synthesis}};
}

} // namespace toolforge
