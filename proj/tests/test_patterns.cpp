#include <map>
#include <set>

#include <gtest/gtest.h>

#include "toolforge/patterns.hpp"

using namespace toolforge;

namespace {

bool has_code(const InteractionPattern& p, const std::string& code)
{
    for (const auto& v : validate_pattern(p)) {
        if (v.code == code) return true;
    }
    return false;
}

InteractionPattern srst()
{
    return {"p", Paradigm::SRST, 1, {1}, {}};
}

} // namespace

TEST(Catalog, TwentyNineUniqueValidPatterns)
{
    const auto c = default_catalog();
    ASSERT_EQ(c.size(), 29u);
    std::set<std::string> ids;
    for (const auto& p : c) {
        ids.insert(p.id);
        EXPECT_TRUE(validate_pattern(p).empty()) << p.id;
    }
    EXPECT_EQ(ids.size(), 29u);
    EXPECT_EQ(c, default_catalog());
}

TEST(Catalog, Composition)
{
    std::map<Paradigm, int> clean, single, switching, combined;
    for (const auto& p : default_catalog()) {
        const auto& ev = p.perturbations;
        if (ev.empty()) ++clean[p.paradigm];
        else if (ev.size() >= 2) ++combined[p.paradigm];
        else if (ev[0].kind == PerturbationClass::tool_switching) ++switching[p.paradigm];
        else ++single[p.paradigm];
        for (const auto& e : ev) {
            if (e.kind == PerturbationClass::tool_switching) EXPECT_GE(p.rounds, 2u);
        }
    }
    for (auto par : kParadigms) EXPECT_EQ(clean[par], 1);
    EXPECT_EQ(single[Paradigm::SRST], 2);
    EXPECT_EQ(single[Paradigm::SRMT], 4);
    EXPECT_EQ(single[Paradigm::MRST], 4);
    EXPECT_EQ(single[Paradigm::MRMT], 8);
    EXPECT_EQ(switching[Paradigm::MRST], 2);
    EXPECT_EQ(switching[Paradigm::MRMT], 2);
    EXPECT_EQ(combined[Paradigm::MRMT], 3);
    EXPECT_EQ(switching[Paradigm::SRST] + switching[Paradigm::SRMT] + combined[Paradigm::SRST], 0);
}

TEST(Validate, Examples)
{
    EXPECT_TRUE(validate_pattern(srst()).empty());

    auto two_rounds = srst();
    two_rounds.rounds = 2;
    two_rounds.calls_per_round = {1, 1};
    EXPECT_TRUE(has_code(two_rounds, "paradigm-structure-mismatch"));

    InteractionPattern srmt{"p", Paradigm::SRMT, 1, {2}, {{PerturbationClass::tool_misselection, 1, 3, std::nullopt}}};
    EXPECT_TRUE(has_code(srmt, "slot-out-of-range"));
}

TEST(Validate, EveryInvariantHasACode)
{
    auto p = srst();
    p.id.clear();
    EXPECT_TRUE(has_code(p, "empty-id"));

    p = srst();
    p.calls_per_round = {1, 1};
    EXPECT_TRUE(has_code(p, "round-count-mismatch"));

    InteractionPattern mrst{"p", Paradigm::MRST, 2, {1, 0}, {}};
    EXPECT_TRUE(has_code(mrst, "empty-round"));

    InteractionPattern mrmt{"p", Paradigm::MRMT, 2, {1, 1}, {}};
    EXPECT_TRUE(has_code(mrmt, "paradigm-structure-mismatch"));

    p = srst();
    p.perturbations = {{PerturbationClass::tool_misselection, 2, 1, std::nullopt}};
    EXPECT_TRUE(has_code(p, "round-out-of-range"));

    p = srst();
    p.perturbations = {{PerturbationClass::tool_switching, 1, 1, SwitchingCase::A}};
    EXPECT_TRUE(has_code(p, "switching-single-round"));

    p = srst();
    p.perturbations = {{PerturbationClass::argument_misselection, 1, 1, SwitchingCase::B}};
    EXPECT_TRUE(has_code(p, "switching-case-mismatch"));

    InteractionPattern sw{"p", Paradigm::MRST, 2, {1, 1}, {{PerturbationClass::tool_switching, 2, 1, std::nullopt}}};
    EXPECT_TRUE(has_code(sw, "switching-case-mismatch"));

    p = srst();
    p.perturbations = {{PerturbationClass::tool_misselection, 1, 1, std::nullopt},
                       {PerturbationClass::argument_misselection, 1, 1, std::nullopt}};
    EXPECT_TRUE(has_code(p, "duplicate-slot-event"));
}

TEST(Events, FailedAttempts)
{
    EXPECT_EQ((PerturbationEvent{PerturbationClass::tool_misselection, 1, 1, std::nullopt}).failed_attempts(), 1u);
    EXPECT_EQ((PerturbationEvent{PerturbationClass::tool_switching, 2, 1, SwitchingCase::A}).failed_attempts(), 1u);
    EXPECT_EQ((PerturbationEvent{PerturbationClass::tool_switching, 2, 1, SwitchingCase::B}).failed_attempts(), 2u);
}

TEST(CatalogJson, RoundTripAndRejection)
{
    const auto c = default_catalog();
    EXPECT_EQ(catalog_from_json(catalog_to_json(c)), c);

    auto j = catalog_to_json(c);
    j.push_back(j[0]);
    EXPECT_THROW(catalog_from_json(j), InvalidPattern);

    auto bad = catalog_to_json({srst()});
    bad[0]["calls_per_round"] = {1, 1};
    bad[0]["rounds"] = 2;
    EXPECT_THROW(catalog_from_json(bad), InvalidPattern);

    EXPECT_THROW(catalog_from_json(nlohmann::json::object()), ParseError);
    EXPECT_THROW(pattern_from_json(nlohmann::json{{"id", "x"}, {"paradigm", "XX"}, {"calls_per_round", {1}}}), ParseError);
    EXPECT_THROW(load_catalog("/nonexistent/catalog.json"), IoError);
}

TEST(CatalogJson, Lookup)
{
    const auto c = default_catalog();
    ASSERT_NE(find_pattern(c, "flow_09"), nullptr);
    EXPECT_EQ(find_pattern(c, "flow_09")->paradigm, Paradigm::MRST);
    EXPECT_EQ(find_pattern(c, "flow_99"), nullptr);
}
