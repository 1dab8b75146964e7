#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "demo_world.hpp"
#include "toolforge/toolforge.hpp"

using namespace toolforge;

namespace {

nlohmann::json minimal_config()
{
    return {{"paths", {{"seeds", "s.jsonl"}, {"tools", "t.json"}, {"output", "out"}}}};
}

PipelineInputs inputs(std::size_t seeds)
{
    auto w = demo::make_world(seeds);
    return {std::move(w.seeds), std::move(w.tools), std::move(w.corpus), default_catalog()};
}

PipelineConfig even_config()
{
    PipelineConfig c;
    c.route_mix = {0.25, 0.25, 0.25, 0.25};
    c.run_seed = 9;
    c.paths = {"s", "t", "", "", "o"};
    return c;
}

std::string read(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Routes, DefaultMixOnHundredSeeds)
{
    EXPECT_EQ(route_counts(100, default_route_mix()), (std::array<std::size_t, 4>{89, 4, 4, 3}));
}

TEST(Routes, LargestRemainderAgainstDefinition)
{
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        RouteMix mix{};
        double sum = 0;
        for (auto& f : mix) sum += f = u(g);
        for (auto& f : mix) f /= sum;
        const std::size_t n = g() % 300;
        const auto counts = route_counts(n, mix);
        std::size_t total = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            total += counts[i];
            const double quota = static_cast<double>(n) * mix[i];
            EXPECT_GE(static_cast<double>(counts[i]), std::floor(quota));
            EXPECT_LE(static_cast<double>(counts[i]), std::floor(quota) + 1);
        }
        EXPECT_EQ(total, n);
    }
}

TEST(Routes, ShuffleKeepsCountsAndRepeats)
{
    const auto routes = assign_routes(100, default_route_mix(), 5);
    std::array<std::size_t, 4> seen{};
    for (auto r : routes) ++seen[static_cast<std::size_t>(r)];
    EXPECT_EQ(seen, (std::array<std::size_t, 4>{89, 4, 4, 3}));
    EXPECT_EQ(routes, assign_routes(100, default_route_mix(), 5));
    EXPECT_NE(routes, assign_routes(100, default_route_mix(), 6));
}

TEST(Routes, PatternsRoundRobinWithinRoute)
{
    const auto catalog = default_catalog();
    const std::vector<Paradigm> routes(5, Paradigm::SRST);
    const auto picked = assign_patterns(routes, catalog);
    std::vector<std::string> ids;
    for (const auto* p : picked) ids.push_back(p->id);
    EXPECT_EQ(ids, (std::vector<std::string>{"flow_01", "flow_02", "flow_03", "flow_01", "flow_02"}));

    std::vector<InteractionPattern> only_srst;
    for (const auto& p : catalog) {
        if (p.paradigm == Paradigm::SRST) only_srst.push_back(p);
    }
    EXPECT_THROW(assign_patterns({Paradigm::MRMT}, only_srst), ConfigError);
}

TEST(Config, DefaultsAndRenormalizedMix)
{
    auto j = minimal_config();
    j["route_mix"] = {{"SRST", 0.894}, {"SRMT", 0.035}, {"MRST", 0.035}, {"MRMT", 0.035}};
    const auto c = config_from_json(j, "/base");
    EXPECT_NEAR(c.route_mix[0] + c.route_mix[1] + c.route_mix[2] + c.route_mix[3], 1.0, 1e-12);
    EXPECT_NEAR(c.route_mix[0], 0.894 / 0.999, 1e-12);
    EXPECT_EQ(c.paths.seeds, "/base/s.jsonl");
    EXPECT_EQ(c.retries, 2u);
    EXPECT_EQ(c.worker_count, 1u);
    EXPECT_EQ(c.validation_mode, ValidationMode::rule_only);
    EXPECT_EQ(c.backend.kind, BackendKind::mock);
}

TEST(Config, Rejections)
{
    auto bad = [](auto edit) {
        auto j = minimal_config();
        edit(j);
        return j;
    };
    const std::vector<nlohmann::json> cases = {
        bad([](auto& j) { j["route_mix"] = {{"SRST", 0.5}, {"MRMT", 0.4}}; }),
        bad([](auto& j) { j["route_mix"] = {{"XRXT", 1.0}}; }),
        bad([](auto& j) { j["route_mix"] = {{"SRST", -0.5}, {"MRMT", 1.5}}; }),
        bad([](auto& j) { j["worker_count"] = 0; }),
        bad([](auto& j) { j["retries"] = -1; }),
        bad([](auto& j) { j["thresholds"] = {{"theta_c", 1.5}}; }),
        bad([](auto& j) { j["bm25"] = {{"k1", 0.0}}; }),
        bad([](auto& j) { j["validation_mode"] = "strict"; }),
        bad([](auto& j) { j["backend"] = {{"kind", "live"}}; }),
        bad([](auto& j) { j["backend"] = {{"faults", {{{"probability", 0.5}}}}}; }),
        bad([](auto& j) { j["backend"] = {{"faults", {{{"tag", "planning"}, {"probability", 2.0}}}}}; }),
        bad([](auto& j) { j["paths"].erase("output"); }),
        bad([](auto& j) { j.erase("paths"); }),
        bad([](auto& j) { j["run_seed"] = "x"; }),
        nlohmann::json::array(),
    };
    for (const auto& j : cases) EXPECT_THROW(config_from_json(j), ConfigError) << j.dump();
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Stats, CountsAndPartialFailure)
{
    std::vector<SeedRecord> records = {
        {"a", Paradigm::SRST, "flow_01", 1, true, "x", {}},
        {"b", Paradigm::SRST, "flow_02", 3, false, "", {{0, "planning", "p"}, {1, "planning", "p"}, {2, "dialogue", "d"}}},
        {"c", Paradigm::MRMT, "flow_16", 2, false, "", {}},
    };
    const auto s = compute_stats(records);
    EXPECT_EQ(s[Paradigm::SRST].attempts, 2u);
    EXPECT_EQ(s[Paradigm::SRST].successes, 1u);
    EXPECT_DOUBLE_EQ(*s[Paradigm::SRST].success_rate(), 0.5);
    EXPECT_FALSE(s[Paradigm::SRMT].success_rate());
    EXPECT_EQ(s.overall.attempts, 3u);
    EXPECT_TRUE(s.partial_failure());

    const auto j = stats_to_json(s);
    EXPECT_TRUE(j["routes"]["SRMT"]["success_rate"].is_null());
    EXPECT_EQ(j["routes"]["MRMT"]["failures"], 1);

    for (const auto& r : records) {
        const auto back = record_from_json(record_to_json(r));
        EXPECT_EQ(record_to_json(back), record_to_json(r));
    }
    EXPECT_THROW(record_from_json({{"seed_id", "a"}}), ParseError);
}

TEST(Synthesis, MockRunSucceedsOnEveryRoute)
{
    const auto in = inputs(24);
    const SimulatedBackend backend;
    const auto r = run_synthesis(even_config(), in, backend);
    ASSERT_EQ(r.records.size(), 24u);
    EXPECT_EQ(r.samples.size(), 24u);
    for (auto p : kParadigms) EXPECT_EQ(r.stats[p].attempts, 6u) << to_string(p);
    EXPECT_EQ(r.stats.overall.successes, 24u);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        EXPECT_EQ(r.records[i].seed_id, in.seeds[i].id);
        EXPECT_EQ(r.records[i].attempts, 1u);
        EXPECT_EQ(find_pattern(in.catalog, r.records[i].pattern_id)->paradigm, r.records[i].paradigm);
    }
    const SeedRegistry registry(in.seeds);
    const ValidationContext vctx{&r.toolset, &in.catalog, &registry};
    for (const auto& s : r.samples) EXPECT_TRUE(rule_check(s, vctx).passed()) << s.id;
}

TEST(Synthesis, WorkerCountDoesNotChangeOutput)
{
    const auto in = inputs(12);
    const SimulatedBackend backend;
    auto c = even_config();
    const auto one = run_synthesis(c, in, backend);
    c.worker_count = 3;
    const auto three = run_synthesis(c, in, backend);
    ASSERT_EQ(one.samples.size(), three.samples.size());
    for (std::size_t i = 0; i < one.samples.size(); ++i) EXPECT_EQ(sample_to_json(one.samples[i]), sample_to_json(three.samples[i]));
    for (std::size_t i = 0; i < one.records.size(); ++i) EXPECT_EQ(record_to_json(one.records[i]), record_to_json(three.records[i]));
}

TEST(Synthesis, CertainFaultFailsOneRouteAfterRetries)
{
    const auto in = inputs(16);
    auto c = even_config();
    c.retries = 2;
    c.backend.faults = {{"planning", "\"paradigm\": \"MRMT\"", 1.0, "<malformed completion>"}};
    const auto backend = make_mock_backend(c.backend);
    const auto r = run_synthesis(c, in, *backend);
    for (const auto& rec : r.records) {
        if (rec.paradigm != Paradigm::MRMT) {
            EXPECT_TRUE(rec.success) << rec.seed_id;
            continue;
        }
        EXPECT_FALSE(rec.success);
        EXPECT_EQ(rec.attempts, 3u);
        ASSERT_EQ(rec.failures.size(), 3u);
        for (std::size_t a = 0; a < 3; ++a) {
            EXPECT_EQ(rec.failures[a].attempt, a);
            EXPECT_EQ(rec.failures[a].phase, "planning");
        }
    }
    EXPECT_EQ(r.stats[Paradigm::MRMT].successes, 0u);
    EXPECT_TRUE(r.stats.partial_failure());
}

TEST(Synthesis, NoSeedsIsAConfigError)
{
    const SimulatedBackend backend;
    EXPECT_THROW(run_synthesis(even_config(), inputs(0), backend), ConfigError);
}

TEST(Outputs, FilesWritten)
{
    const auto in = inputs(6);
    const SimulatedBackend backend;
    const auto r = run_synthesis(even_config(), in, backend);
    const auto dir = std::filesystem::temp_directory_path() / "toolforge_test_outputs";
    std::filesystem::remove_all(dir);
    write_outputs(dir, r);
    for (const char* f : {"samples.jsonl", "records.jsonl", "failures.jsonl", "stats.json", "toolset.json", "acceptance_log.jsonl"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    const auto records = load_records_jsonl((dir / "records.jsonl").string());
    ASSERT_EQ(records.size(), r.records.size());
    for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(record_to_json(records[i]), record_to_json(r.records[i]));
    EXPECT_EQ(nlohmann::json::parse(read(dir / "stats.json")), stats_to_json(r.stats));
    const auto samples = read(dir / "samples.jsonl");
    EXPECT_EQ(static_cast<std::size_t>(std::count(samples.begin(), samples.end(), '\n')), r.samples.size());
    std::filesystem::remove_all(dir);
}

TEST(Backend, MissingScriptFile)
{
    BackendConfig b;
    b.script = "/nonexistent/script.json";
    EXPECT_THROW(make_mock_backend(b), IoError);
}
