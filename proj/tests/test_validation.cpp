#include <random>

#include <gtest/gtest.h>

#include "world_fixture.hpp"

using namespace toolforge;

namespace {

World& world()
{
    static World w(8);
    return w;
}

const Sample& clean()
{
    static const Sample s = world().synthesize(0, world().pattern("flow_16"));
    return s;
}

std::vector<RuleId> failing(const RuleReport& r)
{
    std::vector<RuleId> out;
    for (auto id : kRules) {
        if (!r[id].pass) out.push_back(id);
    }
    return out;
}

ScriptedBackend judges(const Sample& s, std::array<const char*, 3> verdicts)
{
    BackendScript script;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto r = judge_request(s, i);
        script.add(r.tag, r.messages, verdicts[i]);
    }
    return ScriptedBackend(script);
}

} // namespace

TEST(Parser, Examples)
{
    auto p = parse_assistant_turn("<think>t</think><answer>a</answer>");
    EXPECT_EQ(p.think, "t");
    EXPECT_EQ(p.answer, "a");
    EXPECT_TRUE(p.tool_calls.empty());
    EXPECT_TRUE(p.residue.empty());
    EXPECT_TRUE(p.well_formed());

    p = parse_assistant_turn("<think>t</think><tool_call>\n{\"name\":\"x\",\"arguments\":{}}\n</tool_call>");
    ASSERT_EQ(p.tool_calls.size(), 1u);
    EXPECT_EQ(p.tool_calls[0].name, "x");
    EXPECT_FALSE(p.answer);

    const std::string broken = "<think>t<answer>a</answer>";
    p = parse_assistant_turn(broken);
    EXPECT_FALSE(p.think);
    EXPECT_EQ(p.residue, broken);
    EXPECT_FALSE(p.well_formed());
}

TEST(Parser, NeverThrowsOnJunk)
{
    std::mt19937 g(2);
    const std::vector<std::string> pieces = {"<think>", "</think>", "<answer>", "</answer>", "<tool_call>", "</tool_call>",
                                             "{\"name\":\"a\",\"arguments\":{}}", "x", "\n", "{", "}"};
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        for (std::size_t k = 0, n = g() % 8; k < n; ++k) s += pieces[g() % pieces.size()];
        EXPECT_NO_THROW(parse_assistant_turn(s));
    }
}

TEST(Parser, RenderRoundTrip)
{
    for (const auto& t : clean().turns) {
        if (t.role != Role::assistant) continue;
        const auto p = parse_assistant_turn(t.content);
        ASSERT_TRUE(p.well_formed());
        const auto q = parse_assistant_turn(render(p));
        EXPECT_EQ(q.think, p.think);
        EXPECT_EQ(q.tool_calls, p.tool_calls);
        EXPECT_EQ(q.answer, p.answer);
        EXPECT_EQ(q.residue, p.residue);
    }
}

TEST(Rules, DimensionMapping)
{
    using enum RuleDimension;
    const std::array<RuleDimension, 9> expected = {format_structure, format_structure, tool_protocol,
                                                   tool_protocol,    format_structure, dialogue_correctness,
                                                   dialogue_correctness, dialogue_correctness, traceability};
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(dimension(kRules[i]), expected[i]);
    for (auto r : kRules) EXPECT_EQ(parse_rule(to_string(r)), r);
}

TEST(Rules, CleanSamplePassesAndIsIdempotent)
{
    const auto a = rule_check(clean(), world().vctx);
    EXPECT_TRUE(a.passed());
    EXPECT_EQ(a, rule_check(clean(), world().vctx));
}

TEST(Rules, UnknownToolNameFailsOnlyExistence)
{
    auto s = clean();
    for (auto& t : s.turns) {
        if (t.role != Role::assistant) continue;
        auto p = parse_assistant_turn(t.content);
        if (p.tool_calls.empty()) continue;
        p.tool_calls[0].name = "no_such_tool";
        t.content = render(p);
        break;
    }
    EXPECT_EQ(failing(rule_check(s, world().vctx)), std::vector<RuleId>{RuleId::R3});
}

TEST(Rules, BlankSeedIdFailsOnlyTraceability)
{
    auto s = clean();
    s.provenance.seed_id.clear();
    EXPECT_EQ(failing(rule_check(s, world().vctx)), std::vector<RuleId>{RuleId::R9});
}

TEST(Rules, AtomicCorruptionMatrix)
{
    const auto& w = world();
    const auto atomic = atomic_corruptions();
    ASSERT_EQ(atomic.size(), 9u);
    for (const auto& p : w.catalog) {
        for (std::size_t seed = 0; seed < 2; ++seed) {
            const auto s = w.synthesize(seed, p);
            ASSERT_TRUE(rule_check(s, w.vctx).passed()) << p.id;
            for (std::size_t i = 0; i < 9; ++i) {
                EXPECT_EQ(atomic[i].target, kRules[i]);
                const auto corrupted = atomic[i].apply(s);
                ASSERT_TRUE(corrupted) << atomic[i].id << " on " << p.id;
                EXPECT_EQ(failing(rule_check(*corrupted, w.vctx)), std::vector<RuleId>{kRules[i]})
                    << atomic[i].id << " on " << p.id;
            }
        }
    }
}

TEST(Rules, AnswerNormalizationIsSymmetric)
{
    const std::vector<std::string> answers = {"The Tarn", "tarn.", "<b>Tarn</b>", "A tarn", "Tarn River", "tarn  "};
    for (const auto& a : answers) {
        for (const auto& b : answers) {
            EXPECT_EQ(text::normalize_answer(a) == text::normalize_answer(b),
                      text::normalize_answer(b) == text::normalize_answer(a));
        }
    }
    EXPECT_EQ(text::normalize_answer("The Tarn"), text::normalize_answer("tarn."));
}

TEST(Rules, WithoutContextFallsBackToSample)
{
    EXPECT_TRUE(rule_check(clean()).passed());
}

TEST(Judges, Verdicts)
{
    const auto& s = clean();
    EXPECT_TRUE(model_verify(s, judges(s, {"PASS", "PASS", "PASS"})).passed());
    const auto v = model_verify(s, judges(s, {"PASS", "FAIL\nthe second step does not follow", "PASS"}));
    EXPECT_FALSE(v.passed());
    EXPECT_TRUE(v.principles[0].pass);
    EXPECT_FALSE(v.principles[1].pass);
    EXPECT_EQ(kPrinciples[1].key, "logical_soundness");
    EXPECT_EQ(v.principles[1].rationale, "the second step does not follow");
    EXPECT_THROW(model_verify(s, judges(s, {"maybe", "PASS", "PASS"})), JudgeParseError);
}

TEST(Judges, ThreeSeparateRequests)
{
    const auto& s = clean();
    std::set<std::string> tags;
    std::set<std::uint64_t> prints;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto r = judge_request(s, i);
        tags.insert(r.tag);
        prints.insert(fingerprint(r.messages));
    }
    EXPECT_EQ(tags, (std::set<std::string>{"judge:principle-1", "judge:principle-2", "judge:principle-3"}));
    EXPECT_EQ(prints.size(), 3u);
}

TEST(Validate, LayerOrdering)
{
    const auto& w = world();
    const auto& s = clean();
    auto broken = s;
    broken.provenance.seed_id.clear();
    const auto all_pass = judges(s, {"PASS", "PASS", "PASS"});

    auto r = validate(broken, w.vctx, &all_pass, ValidationMode::full);
    EXPECT_FALSE(r.semantic);
    EXPECT_FALSE(r.accepted);

    r = validate(s, w.vctx, nullptr, ValidationMode::rule_only);
    EXPECT_TRUE(r.accepted);
    EXPECT_FALSE(r.semantic);

    r = validate(s, w.vctx, &all_pass, ValidationMode::full);
    EXPECT_TRUE(r.accepted);
    ASSERT_TRUE(r.semantic);
    EXPECT_TRUE(r.semantic->passed());

    const auto j = report_to_json(s.id, r);
    EXPECT_EQ(j["rules"]["R1"], "pass");
    EXPECT_EQ(j["semantic"]["logical_soundness"], "pass");
    EXPECT_EQ(j["accepted"], true);

    EXPECT_THROW(validate(s, w.vctx, nullptr, ValidationMode::full), BadRequest);
}

TEST(Validate, FailReportCarriesDetail)
{
    auto s = clean();
    s.provenance.seed_id.clear();
    const auto j = report_to_json(s.id, validate(s, world().vctx, nullptr, ValidationMode::rule_only));
    EXPECT_TRUE(j["rules"]["R9"].contains("fail"));
    EXPECT_TRUE(j["semantic"].is_null());
}
