#pragma once

// Negative-mining reward and an exhaustive search over small corruption spaces, written
// from the definitions without the miner's cache or tree.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "toolforge/toolforge.hpp"

namespace mining_oracle {

using namespace toolforge;

// Reward written out from its definition; rule_check and levenshtein are checked elsewhere.
inline double hand_reward(const Sample& base, const Sample& s, RuleId target, const ValidationContext& ctx, std::size_t* others = nullptr)
{
    const auto report = rule_check(s, ctx);
    std::size_t passed = 0;
    for (auto r : kRules) passed += r != target && report[r].pass;
    if (others) *others = passed;
    if (report[target].pass || passed < 7) return 0.0;
    auto strip = [](Sample x) {
        x.info_pairs.clear();
        return mining_text(x);
    };
    const auto a = strip(base);
    const auto b = strip(s);
    const double d = static_cast<double>(levenshtein(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
    return 0.5 * (static_cast<double>(passed) / 8.0) + 0.5 * (1.0 - d);
}

struct Found {
    std::string id;
    double difficulty;
    bool operator<(const Found& o) const { return difficulty != o.difficulty ? difficulty > o.difficulty : id < o.id; }
};

// Every state reachable with up to `depth` applicable corruptions, ranked like the miner ranks.
inline std::vector<Found> brute_force(const std::vector<Sample>& bases, const std::vector<Corruption>& actions, std::size_t depth,
                                      RuleId target, const ValidationContext& ctx)
{
    std::map<std::string, Found> seen;
    for (const auto& base : bases) {
        auto strip = [](Sample x) {
            x.info_pairs.clear();
            return mining_text(x);
        };
        std::vector<Sample> frontier = {base};
        for (std::size_t d = 0; d < depth; ++d) {
            std::vector<Sample> next;
            for (const auto& s : frontier) {
                for (const auto& c : actions) {
                    auto out = c.apply(s);
                    if (!out) continue;
                    const double r = hand_reward(base, *out, target, ctx);
                    const auto id = mined_id(base.id, strip(*out));
                    if (r > 0) seen[id] = {id, r};
                    next.push_back(std::move(*out));
                }
            }
            frontier = std::move(next);
        }
    }
    std::vector<Found> out;
    for (auto& [k, f] : seen) out.push_back(f);
    std::sort(out.begin(), out.end());
    if (out.size() > 5) out.resize(5);
    return out;
}

// Baseline: `walks` random corruption walks of 1-3 steps, then `picks` uniform draws among
// the ones that qualify.
inline std::vector<double> random_picks(const std::vector<Sample>& bases, const std::vector<Corruption>& corruptions,
                                        std::size_t walks, std::size_t picks, RuleId target, const ValidationContext& ctx,
                                        std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> pool;
    for (std::size_t k = 0; k < walks; ++k) {
        const auto b = rng.below(bases.size());
        Sample s = bases[b];
        for (std::size_t d = 0, depth = 1 + rng.below(3); d < depth; ++d) {
            auto next = corruptions[rng.below(corruptions.size())].apply(s);
            if (next) s = std::move(*next);
        }
        if (const double r = hand_reward(bases[b], s, target, ctx); r > 0) pool.push_back(r);
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < picks && !pool.empty(); ++k) out.push_back(pool[rng.below(pool.size())]);
    return out;
}

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

} // namespace mining_oracle
