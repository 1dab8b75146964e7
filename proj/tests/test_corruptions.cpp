#include <map>
#include <set>

#include <gtest/gtest.h>

#include "world_fixture.hpp"

using namespace toolforge;

namespace {

World& world()
{
    static World w(6);
    return w;
}

} // namespace

TEST(Inventory, CanonicalFirstThenVariants)
{
    const auto all = all_corruptions();
    const auto atomic = atomic_corruptions();
    ASSERT_EQ(all.size(), 37u);
    std::set<std::string> ids;
    std::map<RuleId, int> per_rule;
    for (std::size_t i = 0; i < all.size(); ++i) {
        ids.insert(all[i].id);
        ++per_rule[all[i].target];
        EXPECT_EQ(all[i].id.substr(0, to_string(all[i].target).size() + 1), to_string(all[i].target) + ".") << all[i].id;
        if (i < atomic.size()) EXPECT_EQ(all[i].id, atomic[i].id);
    }
    EXPECT_EQ(ids.size(), all.size());
    for (auto r : kRules) EXPECT_GE(per_rule[r], 2) << to_string(r);
    EXPECT_EQ(find_corruption(all, "R9.blank_seed_id"), 8u);
    EXPECT_FALSE(find_corruption(all, "R0.none"));
}

TEST(Inventory, EveryApplicableCorruptionBreaksItsRule)
{
    const auto& w = world();
    const auto all = all_corruptions();
    std::map<std::string, int> applied;
    for (const auto& p : w.catalog) {
        for (std::size_t seed = 0; seed < w.world.seeds.size(); ++seed) {
            const auto s = w.synthesize(seed, p);
            for (const auto& c : all) {
                const auto out = c.apply(s);
                if (!out) continue;
                ++applied[c.id];
                const auto report = rule_check(*out, w.vctx);
                EXPECT_FALSE(report[c.target].pass) << c.id << " on " << p.id;
            }
        }
    }
    // every corruption applies somewhere in the catalog
    for (const auto& c : all) EXPECT_GT(applied[c.id], 0) << "never applied: " << c.id;
}

TEST(Inventory, DeclineWhenNothingToChange)
{
    const auto& w = world();
    auto s = w.synthesize(0, w.pattern("flow_01"));
    const auto all = all_corruptions();
    const auto truncate = all[*find_corruption(all, "R7.truncate")];
    auto one_word = s;
    auto& last = one_word.turns.back().content;
    last = last.substr(0, last.rfind("<answer>")) + "<answer>Tarn</answer>";
    EXPECT_FALSE(truncate.apply(one_word));

    auto no_version = s;
    no_version.provenance.pipeline_version.clear();
    EXPECT_FALSE(all[*find_corruption(all, "R9.blank_version")].apply(no_version));
    EXPECT_FALSE(all[*find_corruption(all, "R3.rename_unknown@first")].apply(Sample{}));
}

TEST(Inventory, RenameCoversTheWholeChainAndReverts)
{
    const auto& w = world();
    // argument misselection keeps one tool across both attempts
    const auto s = w.synthesize(1, w.pattern("flow_03"));
    const auto rename = atomic_corruptions()[2];
    const auto out = rename.apply(s);
    ASSERT_TRUE(out);
    std::vector<std::string> names;
    for (const auto& t : out->turns) {
        if (t.role != Role::assistant) continue;
        for (const auto& c : scan_assistant_turn(t.content).tool_calls) names.push_back(c.name);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"unknown_tool", "unknown_tool"}));

    std::string original;
    for (const auto& t : s.turns) {
        if (t.role == Role::assistant && !scan_assistant_turn(t.content).tool_calls.empty()) {
            original = scan_assistant_turn(t.content).tool_calls[0].name;
            break;
        }
    }
    auto back = *out;
    corrupt::rename_calls(back, "unknown_tool", original);
    EXPECT_EQ(sample_to_json(back), sample_to_json(s));
    EXPECT_TRUE(rule_check(back, w.vctx).passed());
}

TEST(Inventory, ApplyIsPure)
{
    const auto& w = world();
    const auto s = w.synthesize(2, w.pattern("flow_29"));
    const auto before = sample_to_json(s);
    for (const auto& c : all_corruptions()) {
        const auto a = c.apply(s);
        const auto b = c.apply(s);
        EXPECT_EQ(a.has_value(), b.has_value()) << c.id;
        if (a) EXPECT_EQ(sample_to_json(*a), sample_to_json(*b)) << c.id;
    }
    EXPECT_EQ(sample_to_json(s), before);
}
