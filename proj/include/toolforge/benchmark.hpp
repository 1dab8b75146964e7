#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/corruptions.hpp"
#include "toolforge/error.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/levenshtein.hpp"
#include "toolforge/mcts.hpp"
#include "toolforge/prompts.hpp"
#include "toolforge/rewrites.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/validation.hpp"

namespace toolforge {

/// Text the edit distance is measured over: every field of the sample except its information
/// pairs, which no corruption touches. Fields are written in declaration order, one per line,
/// so a local edit stays a local edit in the text.
inline std::string mining_text(const Sample& s)
{
    std::string out;
    out.reserve(16 * 1024);
    const auto field = [&out](std::string_view v) {
        out += v;
        out += '\n';
    };
    field(s.id);
    field(s.seed_id);
    field(s.pattern_id);
    field(s.reference_answer);
    for (const auto& t : s.tools_offered) {
        field(t.id);
        field(t.name);
        field(t.description);
        field(t.domain);
        field(t.base_id.value_or(""));
        for (const auto& p : t.parameters) {
            out += p.name;
            out += ' ';
            out += to_string(p.kind);
            out += ' ';
            out += to_string(p.role);
            out += p.required ? " required " : " optional ";
            field(p.description);
        }
    }
    for (const auto& t : s.turns) {
        out += to_string(t.role);
        out += ':';
        field(t.content);
    }
    const auto& pv = s.provenance;
    field(pv.seed_id);
    field(pv.pattern_id);
    for (const auto& id : pv.tool_ids) field(id);
    for (const auto& id : pv.gold_passage_ids) field(id);
    for (const auto& r : pv.requests) field(r.tag + " " + to_hex(r.fingerprint));
    field(pv.pipeline_version);
    field(std::to_string(pv.run_seed));
    return out;
}

struct NegativeScore {
    bool qualifies = false;
    std::size_t others_passed = 0;
    double edit_distance = 0.0;
    double difficulty = 0.0;
    RuleReport report;
};

/// Near-miss quality of a corrupted sample: zero unless it fails `target` and passes at
/// least 7 of the other 8 rules.
inline NegativeScore score_negative(const std::string& original_text, const Sample& corrupted, RuleId target,
                                    const ValidationContext& ctx)
{
    NegativeScore s;
    s.report = rule_check(corrupted, ctx);
    s.others_passed = s.report.pass_count() - (s.report[target].pass ? 1 : 0);
    if (s.report[target].pass || s.others_passed < 7) return s;
    s.qualifies = true;
    s.edit_distance = normalized_edit_distance(original_text, mining_text(corrupted));
    s.difficulty = 0.5 * (static_cast<double>(s.others_passed) / 8.0) + 0.5 * (1.0 - s.edit_distance);
    return s;
}

struct MinedNegative {
    Sample sample;
    RuleId target = RuleId::R1;
    std::string base_id;
    std::vector<std::string> corruption_sequence;
    double difficulty = 0.0;
    std::size_t others_passed = 0;
};

struct MiningParams {
    std::size_t budget = 500;
    std::size_t max_depth = 3; // corruption steps
    double exploration = std::numbers::sqrt2;
    std::uint64_t seed = 0;
    std::size_t keep = 5;
    ValidationContext ctx{};
    /// Action space; empty means all_corruptions().
    std::vector<Corruption> corruptions;
};

inline std::string mined_id(const std::string& base_id, const std::string& text)
{
    return base_id + "~" + to_hex(fnv1a64(text));
}

/// Memo shared by the searches over one positive set: corruption results and rule reports
/// do not depend on the target rule, so mining all nine rules reuses them.
class MiningCache {
public:
    struct Applied {
        bool done = false;
        std::shared_ptr<const Sample> result;
        std::string text;
    };

    MiningCache(std::vector<Sample> positives, std::vector<Corruption> corruptions, ValidationContext ctx)
        : corruptions_(std::move(corruptions)), ctx_(ctx)
    {
        if (corruptions_.empty()) corruptions_ = all_corruptions();
        for (auto& p : positives) {
            info_pairs_.push_back(std::move(p.info_pairs));
            p.info_pairs.clear();
            texts_.push_back(mining_text(p));
            positives_.push_back(std::make_shared<const Sample>(std::move(p)));
        }
    }

    std::size_t size() const { return positives_.size(); }
    const std::shared_ptr<const Sample>& positive(std::size_t i) const { return positives_[i]; }
    const std::string& text(std::size_t i) const { return texts_[i]; }
    const std::vector<InformationPair>& info_pairs(std::size_t i) const { return info_pairs_[i]; }
    const std::vector<Corruption>& corruptions() const { return corruptions_; }
    const ValidationContext& context() const { return ctx_; }

    /// Corruption `a` applied to `sample` (whose mining text is `text`), memoized by content.
    const Applied& applied(const Sample& sample, const std::string& text, std::size_t a)
    {
        auto& slot = applied_[text];
        if (slot.empty()) slot.resize(corruptions_.size());
        auto& entry = slot[a];
        if (!entry.done) {
            entry.done = true;
            if (auto r = corruptions_[a].apply(sample)) {
                entry.text = mining_text(*r);
                entry.result = std::make_shared<const Sample>(std::move(*r));
            }
        }
        return entry;
    }

    const RuleReport& report(const Sample& sample, const std::string& text)
    {
        auto it = reports_.find(text);
        if (it == reports_.end()) it = reports_.emplace(text, rule_check(sample, ctx_)).first;
        return it->second;
    }

    double edit_distance(std::size_t base, const std::string& text)
    {
        const auto key = std::to_string(base) + "\x1f" + text;
        auto it = distances_.find(key);
        if (it == distances_.end()) it = distances_.emplace(key, normalized_edit_distance(texts_[base], text)).first;
        return it->second;
    }

private:
    std::vector<Corruption> corruptions_;
    ValidationContext ctx_;
    std::vector<std::shared_ptr<const Sample>> positives_;
    std::vector<std::string> texts_;
    std::vector<std::vector<InformationPair>> info_pairs_;
    std::unordered_map<std::string, std::vector<Applied>> applied_;
    std::unordered_map<std::string, RuleReport> reports_;
    std::unordered_map<std::string, double> distances_;
};

/// Search domain: the first action picks the base positive, later actions apply corruptions.
class MiningDomain {
public:
    struct State {
        std::size_t base = static_cast<std::size_t>(-1);
        std::vector<std::size_t> sequence;
        std::shared_ptr<const Sample> sample;
        std::string text;
    };

    MiningDomain(RuleId target, MiningCache& cache) : target_(target), cache_(cache) {}

    State root() const { return {}; }

    std::vector<std::size_t> candidates(const State& s) const
    {
        std::vector<std::size_t> out(s.sample ? cache_.corruptions().size() : cache_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
        return out;
    }

    bool applicable(const State& s, std::size_t a) const
    {
        return !s.sample || cache_.applied(*s.sample, s.text, a).result != nullptr;
    }

    std::vector<std::size_t> actions(const State& s) const
    {
        std::vector<std::size_t> out;
        for (auto a : candidates(s)) {
            if (applicable(s, a)) out.push_back(a);
        }
        return out;
    }

    State apply(const State& s, std::size_t a) const
    {
        if (!s.sample) {
            return {a, {}, cache_.positive(a), cache_.text(a)};
        }
        State next{s.base, s.sequence, s.sample, s.text};
        next.sequence.push_back(a);
        const auto& r = cache_.applied(*s.sample, s.text, a);
        if (r.result) {
            next.sample = r.result;
            next.text = r.text;
        }
        return next;
    }

    NegativeScore score(const State& s) const
    {
        NegativeScore out;
        if (!s.sample || s.sequence.empty()) return out;
        out.report = cache_.report(*s.sample, s.text);
        out.others_passed = out.report.pass_count() - (out.report[target_].pass ? 1 : 0);
        if (out.report[target_].pass || out.others_passed < 7) return out;
        out.qualifies = true;
        out.edit_distance = cache_.edit_distance(s.base, s.text);
        out.difficulty = 0.5 * (static_cast<double>(out.others_passed) / 8.0) + 0.5 * (1.0 - out.edit_distance);
        return out;
    }

    double reward(const State& s) const
    {
        const auto sc = score(s);
        return sc.qualifies ? sc.difficulty : 0.0;
    }

    std::string key(const State& s) const
    {
        if (!s.sample) return "root";
        return std::to_string(s.base) + "\x1f" + s.text;
    }

    const MiningCache& cache() const { return cache_; }

private:
    RuleId target_;
    MiningCache& cache_;
};

inline bool negative_before(const MinedNegative& a, const MinedNegative& b)
{
    if (a.difficulty != b.difficulty) return a.difficulty > b.difficulty;
    return a.sample.id < b.sample.id;
}

/// UCT search for the hardest negatives of one rule over a prepared cache. Results are
/// distinct by content and ordered by (difficulty desc, id asc).
inline std::vector<MinedNegative> mcts_mine(RuleId target, MiningCache& cache, const MiningParams& params)
{
    if (cache.size() == 0) {
        throw NoQualifyingNegative(to_string(target) + ": no positives to corrupt");
    }
    if (params.budget == 0) {
        throw BadRequest("mining budget must be at least 1");
    }
    MiningDomain domain(target, cache);
    UctSearch<MiningDomain> search(domain, {params.budget, params.max_depth + 1, params.exploration, params.seed});
    const auto states = search.run(domain.root());

    std::vector<MinedNegative> found;
    for (const auto& st : states) {
        if (st.reward <= 0.0) continue;
        const auto base = st.state.base;
        MinedNegative m;
        m.sample = *st.state.sample;
        m.sample.info_pairs = cache.info_pairs(base);
        m.base_id = cache.positive(base)->id;
        m.sample.id = mined_id(m.base_id, st.state.text);
        m.target = target;
        for (auto a : st.state.sequence) m.corruption_sequence.push_back(cache.corruptions()[a].id);
        m.difficulty = st.reward;
        m.others_passed = domain.score(st.state).others_passed;
        found.push_back(std::move(m));
    }
    if (found.empty()) {
        throw NoQualifyingNegative(to_string(target) + ": no qualifying negative within the budget");
    }
    std::sort(found.begin(), found.end(), negative_before);
    if (found.size() > params.keep) found.resize(params.keep);
    return found;
}

inline std::vector<MinedNegative> mcts_mine(RuleId target, const std::vector<Sample>& positives, const MiningParams& params)
{
    MiningCache cache(positives, params.corruptions, params.ctx);
    return mcts_mine(target, cache, params);
}

/// Re-applies a stored corruption sequence to its base sample.
inline std::optional<Sample> replay_corruptions(const Sample& base, const std::vector<std::string>& sequence,
                                                const std::vector<Corruption>& corruptions)
{
    Sample s = base;
    for (const auto& id : sequence) {
        const auto i = find_corruption(corruptions, id);
        if (!i) return std::nullopt;
        if (auto next = corruptions[*i].apply(s)) s = std::move(*next);
    }
    return s;
}

inline nlohmann::json negative_to_json(const MinedNegative& m)
{
    return {{"sample", sample_to_json(m.sample)},
            {"target_rule", to_string(m.target)},
            {"base_id", m.base_id},
            {"corruption_sequence", m.corruption_sequence},
            {"difficulty", m.difficulty},
            {"others_passed", m.others_passed}};
}

// ---------------------------------------------------------------------------
// Benchmark

enum class Tier { positive, rule_negative, semantic_negative };
enum class Label { valid, invalid };

inline std::string_view to_string(Tier t)
{
    switch (t) {
    case Tier::positive: return "positive";
    case Tier::rule_negative: return "rule_negative";
    case Tier::semantic_negative: return "semantic_negative";
    }
    return "?";
}

inline Tier parse_tier(std::string_view s)
{
    for (auto t : {Tier::positive, Tier::rule_negative, Tier::semantic_negative}) {
        if (to_string(t) == s) return t;
    }
    throw ParseError("unknown tier '" + std::string(s) + "'");
}

struct BenchmarkItem {
    Sample sample;
    Label label = Label::valid;
    Tier tier = Tier::positive;
    std::string pattern_id;
    std::string target; // rule id or principle key; empty for positives
    double difficulty = 0.0;
    std::vector<std::string> corruption_sequence;
};

inline nlohmann::json item_to_json(const BenchmarkItem& it)
{
    nlohmann::json j = {{"sample", sample_to_json(it.sample)},
                        {"label", it.label == Label::valid ? "valid" : "invalid"},
                        {"tier", to_string(it.tier)},
                        {"pattern_id", it.pattern_id},
                        {"target", it.target.empty() ? nlohmann::json(nullptr) : nlohmann::json(it.target)}};
    if (it.tier == Tier::rule_negative) {
        j["difficulty"] = it.difficulty;
        j["corruption_sequence"] = it.corruption_sequence;
    }
    return j;
}

inline BenchmarkItem item_from_json(const nlohmann::json& j)
{
    try {
        BenchmarkItem it;
        it.sample = sample_from_json(j.at("sample"));
        const auto label = j.at("label").get<std::string>();
        if (label != "valid" && label != "invalid") throw ParseError("unknown label '" + label + "'");
        it.label = label == "valid" ? Label::valid : Label::invalid;
        it.tier = parse_tier(j.at("tier").get<std::string>());
        it.pattern_id = j.value("pattern_id", std::string{});
        if (j.contains("target") && j["target"].is_string()) it.target = j["target"].get<std::string>();
        it.difficulty = j.value("difficulty", 0.0);
        it.corruption_sequence = j.value("corruption_sequence", std::vector<std::string>{});
        return it;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("benchmark item: ") + e.what());
    }
}

inline std::vector<BenchmarkItem> load_benchmark_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<BenchmarkItem> out;
    std::string line;
    while (std::getline(in, line)) {
        if (text::is_blank(line)) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(path + ": not JSON");
        out.push_back(item_from_json(j));
    }
    return out;
}

struct BenchmarkParams {
    std::size_t per_pattern = 20;
    std::size_t keep = 5;
    std::size_t budget = 500;
    std::size_t max_depth = 3;
    std::uint64_t run_seed = 0;
    ValidationContext ctx{};
    /// When set, semantic negatives are asked of this model instead of scripted; replies
    /// that do not parse, fail a rule or change nothing are skipped.
    const ChatBackend* violation_model = nullptr;
};

/// Deterministic pick of `n` samples of one stratum.
inline std::vector<Sample> sample_positives(std::vector<Sample> pool, std::size_t n, std::uint64_t seed)
{
    std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    Rng rng(seed);
    for (std::size_t i = pool.size(); i > 1; --i) {
        std::swap(pool[i - 1], pool[rng.below(i)]);
    }
    pool.resize(std::min(n, pool.size()));
    return pool;
}

inline std::uint64_t stratum_seed(std::uint64_t run_seed, std::string_view what, std::string_view pattern_id)
{
    Fnv1a64 h;
    h.u64(run_seed);
    h.bytes(what);
    h.byte(0x1F);
    h.bytes(pattern_id);
    return h.value();
}

/// Three-tier benchmark: positives, mined rule negatives, scripted semantic negatives.
inline std::vector<BenchmarkItem> build_benchmark(const std::map<std::string, std::vector<Sample>>& samples_by_pattern,
                                                  const BenchmarkParams& params)
{
    std::map<std::string, std::vector<Sample>> positives;
    for (const auto& [pattern, pool] : samples_by_pattern) {
        std::vector<Sample> valid;
        for (const auto& s : pool) {
            if (rule_check(s, params.ctx).passed()) valid.push_back(s);
        }
        if (valid.size() < params.per_pattern) {
            throw InsufficientPositives(pattern + ": " + std::to_string(valid.size()) + " validated samples, need "
                                        + std::to_string(params.per_pattern));
        }
        positives[pattern] = sample_positives(std::move(valid), params.per_pattern, stratum_seed(params.run_seed, "tier1", pattern));
    }

    std::vector<BenchmarkItem> items;
    for (const auto& [pattern, ps] : positives) {
        for (const auto& s : ps) items.push_back({s, Label::valid, Tier::positive, pattern, {}, 0.0, {}});
    }

    std::map<std::string, MiningCache> caches;
    for (const auto& [pattern, ps] : positives) caches.try_emplace(pattern, ps, std::vector<Corruption>{}, params.ctx);
    for (auto rule : kRules) {
        std::vector<MinedNegative> merged;
        for (auto& [pattern, cache] : caches) {
            MiningParams mp;
            mp.budget = params.budget;
            mp.max_depth = params.max_depth;
            mp.seed = stratum_seed(params.run_seed, to_string(rule), pattern);
            mp.keep = params.keep;
            try {
                for (auto& m : mcts_mine(rule, cache, mp)) merged.push_back(std::move(m));
            } catch (const NoQualifyingNegative&) {
            }
        }
        std::sort(merged.begin(), merged.end(), negative_before);
        merged.erase(std::unique(merged.begin(), merged.end(),
                                 [](const auto& a, const auto& b) { return a.sample.id == b.sample.id; }),
                     merged.end());
        if (merged.size() > params.keep) merged.resize(params.keep);
        for (auto& m : merged) {
            auto pattern = m.sample.pattern_id;
            items.push_back({std::move(m.sample), Label::invalid, Tier::rule_negative, std::move(pattern),
                             to_string(rule), m.difficulty, m.corruption_sequence});
        }
    }

    auto violation = [&](const Sample& s, std::size_t p) -> std::optional<Sample> {
        if (!params.violation_model) return rewrite::scripted(s, p);
        try {
            auto r = parse_violation(params.violation_model->chat(violation_request(s, p)));
            r.id = s.id;
            if (sample_to_json(r) == sample_to_json(s) || !rule_check(r, params.ctx).passed()) return std::nullopt;
            return r;
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    for (const auto& [pattern, ps] : positives) {
        std::vector<bool> used(ps.size(), false);
        for (std::size_t p = 0; p < kPrinciples.size(); ++p) {
            for (std::size_t k = 0; k < ps.size(); ++k) {
                const auto i = (p + k) % ps.size();
                if (used[i]) continue;
                auto r = violation(ps[i], p);
                if (!r) continue;
                used[i] = true;
                r->id = ps[i].id + "~p" + std::to_string(p + 1);
                items.push_back({std::move(*r), Label::invalid, Tier::semantic_negative, pattern,
                                 std::string(kPrinciples[p].key), 0.0, {}});
                break;
            }
        }
    }
    return items;
}

// ---------------------------------------------------------------------------
// Scoring

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricsReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    Confusion confusion;
};

inline MetricsReport metrics_from(const Confusion& c)
{
    MetricsReport m;
    m.confusion = c;
    const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    m.accuracy = ratio(c.tp + c.tn, c.tp + c.fp + c.fn + c.tn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

/// Validator verdicts (accepted = predicted valid) against benchmark labels.
inline MetricsReport score_validator(const std::vector<BenchmarkItem>& benchmark, const std::map<std::string, bool>& verdicts)
{
    Confusion c;
    for (const auto& it : benchmark) {
        const auto v = verdicts.find(it.sample.id);
        if (v == verdicts.end()) throw MissingVerdict("no verdict for " + it.sample.id);
        const bool valid = it.label == Label::valid;
        if (valid && v->second) ++c.tp;
        else if (!valid && v->second) ++c.fp;
        else if (valid) ++c.fn;
        else ++c.tn;
    }
    return metrics_from(c);
}

inline nlohmann::json metrics_to_json(const MetricsReport& m)
{
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"confusion", {{"tp", m.confusion.tp}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tn", m.confusion.tn}}}};
}

} // namespace toolforge
