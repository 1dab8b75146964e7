#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/corpus.hpp"
#include "toolforge/error.hpp"
#include "toolforge/generator.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/patterns.hpp"
#include "toolforge/planning.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/simulated_backend.hpp"
#include "toolforge/tool_space.hpp"
#include "toolforge/validation.hpp"

namespace toolforge {

enum class BackendKind { mock, live };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    /// Mock: optional script file overlaid on the simulated model.
    std::string script;
    std::vector<FaultRule> faults;
    std::uint64_t fault_seed = 0;
    /// Live: chat-completions endpoint and model name.
    std::string endpoint;
    std::string model;
};

struct PipelinePaths {
    std::string seeds;
    std::string tools;
    std::string corpus;   // optional
    std::string patterns; // optional; the built-in catalog otherwise
    std::string output;
};

using RouteMix = std::array<double, 4>; // in kParadigms order

inline RouteMix default_route_mix()
{
    constexpr double total = 0.894 + 3 * 0.035;
    return {0.894 / total, 0.035 / total, 0.035 / total, 0.035 / total};
}

struct PipelineConfig {
    GateThresholds thresholds{};
    Bm25Params bm25{};
    std::size_t augmentation_k = 5;
    RouteMix route_mix = default_route_mix();
    std::size_t retries = 2;
    std::size_t worker_count = 1;
    std::uint64_t run_seed = 0;
    std::size_t variants_per_tool = 0;
    std::size_t max_attempts_per_slot = 5;
    ValidationMode validation_mode = ValidationMode::rule_only;
    BackendConfig backend{};
    PipelinePaths paths{};
};

namespace config_detail {

template <class T>
T get(const nlohmann::json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p)
{
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

inline std::size_t count(const nlohmann::json& j, const char* key, std::size_t fallback)
{
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

} // namespace config_detail

inline void validate_config(const PipelineConfig& c)
{
    double sum = 0.0;
    for (double f : c.route_mix) {
        if (!(f >= 0.0)) throw ConfigError("route_mix fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("route_mix fractions sum to " + std::to_string(sum) + ", not 1");
    if (c.thresholds.theta_c < 0.0 || c.thresholds.theta_c > 1.0 || c.thresholds.theta_b < 0.0 || c.thresholds.theta_b > 1.0) {
        throw ConfigError("gate thresholds must lie in [0,1]");
    }
    if (c.bm25.k1 <= 0.0 || c.bm25.b < 0.0 || c.bm25.b > 1.0) throw ConfigError("bm25 needs k1 > 0 and b in [0,1]");
    if (c.worker_count == 0) throw ConfigError("worker_count must be at least 1");
    if (c.paths.seeds.empty() || c.paths.tools.empty() || c.paths.output.empty()) {
        throw ConfigError("paths.seeds, paths.tools and paths.output are required");
    }
    if (c.backend.kind == BackendKind::live && c.backend.endpoint.empty()) throw ConfigError("live backend needs an endpoint");
    for (const auto& f : c.backend.faults) {
        if (f.probability < 0.0 || f.probability > 1.0) throw ConfigError("fault probability must lie in [0,1]");
    }
}

/// Reads a config document; relative paths resolve against `base_dir`.
inline PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    using namespace config_detail;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c;
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        c.thresholds.theta_c = get(t, "theta_c", c.thresholds.theta_c);
        c.thresholds.theta_b = get(t, "theta_b", c.thresholds.theta_b);
    }
    if (j.contains("bm25")) {
        c.bm25.k1 = get(j["bm25"], "k1", c.bm25.k1);
        c.bm25.b = get(j["bm25"], "b", c.bm25.b);
    }
    c.augmentation_k = count(j, "augmentation_k", c.augmentation_k);
    if (j.contains("route_mix")) {
        const auto& m = j["route_mix"];
        if (!m.is_object()) throw ConfigError("route_mix must map paradigms to fractions");
        c.route_mix = {0, 0, 0, 0};
        for (const auto& [key, value] : m.items()) {
            Paradigm p;
            try {
                p = parse_paradigm(key);
            } catch (const Error&) {
                throw ConfigError("route_mix names unknown paradigm '" + key + "'");
            }
            if (!value.is_number()) throw ConfigError("route_mix." + key + " must be a number");
            c.route_mix[static_cast<std::size_t>(p)] = value.get<double>();
        }
        // Mixes quoted to a few decimals (0.894/0.035/...) are renormalized; anything
        // further off than rounding could explain is an error.
        const double sum = c.route_mix[0] + c.route_mix[1] + c.route_mix[2] + c.route_mix[3];
        if (sum > 0.0 && std::abs(sum - 1.0) <= 0.01) {
            for (auto& f : c.route_mix) f /= sum;
        }
    }
    c.retries = count(j, "retries", c.retries);
    c.worker_count = count(j, "worker_count", c.worker_count);
    c.run_seed = get(j, "run_seed", c.run_seed);
    c.variants_per_tool = count(j, "variants_per_tool", c.variants_per_tool);
    c.max_attempts_per_slot = count(j, "max_attempts_per_slot", c.max_attempts_per_slot);
    const auto mode = get(j, "validation_mode", std::string("rule_only"));
    if (mode != "rule_only" && mode != "full") throw ConfigError("validation_mode must be rule_only or full");
    c.validation_mode = mode == "full" ? ValidationMode::full : ValidationMode::rule_only;

    if (j.contains("backend")) {
        const auto& b = j["backend"];
        const auto kind = get(b, "kind", std::string("mock"));
        if (kind != "mock" && kind != "live") throw ConfigError("backend.kind must be mock or live");
        c.backend.kind = kind == "live" ? BackendKind::live : BackendKind::mock;
        c.backend.script = resolve(base_dir, get(b, "script", std::string{}));
        c.backend.endpoint = get(b, "endpoint", std::string{});
        c.backend.model = get(b, "model", std::string{});
        c.backend.fault_seed = get(b, "fault_seed", c.run_seed);
        for (const auto& f : b.value("faults", nlohmann::json::array())) {
            FaultRule rule;
            rule.tag = get(f, "tag", std::string{});
            rule.contains = get(f, "contains", std::string{});
            rule.probability = get(f, "probability", 0.0);
            rule.completion = get(f, "completion", rule.completion);
            if (rule.tag.empty()) throw ConfigError("fault rules need a tag");
            c.backend.faults.push_back(std::move(rule));
        }
    }
    if (!j.contains("paths") || !j["paths"].is_object()) throw ConfigError("config needs a paths object");
    const auto& p = j["paths"];
    c.paths.seeds = resolve(base_dir, get(p, "seeds", std::string{}));
    c.paths.tools = resolve(base_dir, get(p, "tools", std::string{}));
    c.paths.corpus = resolve(base_dir, get(p, "corpus", std::string{}));
    c.paths.patterns = resolve(base_dir, get(p, "patterns", std::string{}));
    c.paths.output = resolve(base_dir, get(p, "output", std::string{}));
    validate_config(c);
    return c;
}

inline PipelineConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + " is not JSON");
    return config_from_json(j, std::filesystem::path(path).parent_path());
}

/// The configured mock: simulated model, optional script overlay, optional fault injection.
inline std::shared_ptr<const ChatBackend> make_mock_backend(const BackendConfig& b)
{
    std::shared_ptr<const ChatBackend> backend = std::make_shared<SimulatedBackend>();
    if (!b.script.empty()) {
        std::ifstream in(b.script);
        if (!in) throw IoError("cannot open script " + b.script);
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ParseError(b.script + " is not JSON");
        backend = std::make_shared<OverlayBackend>(BackendScript::from_json(j), backend);
    }
    if (!b.faults.empty()) {
        backend = std::make_shared<FaultInjectingBackend>(backend, b.faults, b.fault_seed);
    }
    return backend;
}

// ---------------------------------------------------------------------------
// Route assignment

/// Largest-remainder counts per paradigm; remainder ties go to the earlier paradigm.
inline std::array<std::size_t, 4> route_counts(std::size_t n, const RouteMix& mix)
{
    std::array<std::size_t, 4> counts{};
    std::array<double, 4> rest{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double quota = static_cast<double>(n) * mix[i];
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        rest[i] = quota - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::array<std::size_t, 4> order = {0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rest[a] > rest[b]; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 4]];
    return counts;
}

/// Paradigm per seed position: the stratified counts laid out in a seeded shuffle.
inline std::vector<Paradigm> assign_routes(std::size_t n, const RouteMix& mix, std::uint64_t run_seed)
{
    const auto counts = route_counts(n, mix);
    std::vector<Paradigm> out;
    for (std::size_t i = 0; i < 4; ++i) out.insert(out.end(), counts[i], kParadigms[i]);
    Rng rng(mix64(run_seed ^ 0x726f757465ULL));
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
    return out;
}

/// Patterns for each seed: round-robin over the route's patterns in catalog order.
inline std::vector<const InteractionPattern*> assign_patterns(const std::vector<Paradigm>& routes,
                                                              const std::vector<InteractionPattern>& catalog)
{
    std::array<std::vector<const InteractionPattern*>, 4> by_route;
    for (const auto& p : catalog) by_route[static_cast<std::size_t>(p.paradigm)].push_back(&p);
    std::array<std::size_t, 4> next{};
    std::vector<const InteractionPattern*> out;
    for (auto r : routes) {
        const auto i = static_cast<std::size_t>(r);
        if (by_route[i].empty()) throw ConfigError(std::string("catalog has no pattern for ") + std::string(to_string(r)));
        out.push_back(by_route[i][next[i]++ % by_route[i].size()]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Records and statistics

struct AttemptFailure {
    std::size_t attempt = 0;
    std::string phase;
    std::string detail;
};

struct SeedRecord {
    std::string seed_id;
    Paradigm paradigm = Paradigm::SRST;
    std::string pattern_id;
    std::size_t attempts = 0;
    bool success = false;
    std::string sample_id;
    std::vector<AttemptFailure> failures;
};

inline nlohmann::json record_to_json(const SeedRecord& r)
{
    auto failures = nlohmann::json::array();
    for (const auto& f : r.failures) failures.push_back({{"attempt", f.attempt}, {"phase", f.phase}, {"detail", f.detail}});
    return {{"seed_id", r.seed_id},
            {"paradigm", to_string(r.paradigm)},
            {"pattern_id", r.pattern_id},
            {"attempts", r.attempts},
            {"success", r.success},
            {"sample_id", r.sample_id.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.sample_id)},
            {"failures", failures}};
}

inline SeedRecord record_from_json(const nlohmann::json& j)
{
    try {
        SeedRecord r;
        r.seed_id = j.at("seed_id").get<std::string>();
        r.paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
        r.pattern_id = j.value("pattern_id", std::string{});
        r.attempts = j.value("attempts", std::size_t{0});
        r.success = j.at("success").get<bool>();
        if (j.contains("sample_id") && j["sample_id"].is_string()) r.sample_id = j["sample_id"].get<std::string>();
        for (const auto& f : j.value("failures", nlohmann::json::array())) {
            r.failures.push_back({f.value("attempt", std::size_t{0}), f.value("phase", std::string{}), f.value("detail", std::string{})});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("seed record: ") + e.what());
    }
}

inline std::vector<SeedRecord> load_records_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<SeedRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (text::is_blank(line)) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(path + ": not JSON");
        out.push_back(record_from_json(j));
    }
    return out;
}

struct RouteCount {
    std::size_t attempts = 0;
    std::size_t successes = 0;

    std::optional<double> success_rate() const
    {
        if (attempts == 0) return std::nullopt;
        return static_cast<double>(successes) / static_cast<double>(attempts);
    }
};

struct RouteStats {
    std::array<RouteCount, 4> routes{};
    RouteCount overall;

    const RouteCount& operator[](Paradigm p) const { return routes[static_cast<std::size_t>(p)]; }
    /// True when some route has seeds but no success.
    bool partial_failure() const
    {
        return std::any_of(routes.begin(), routes.end(), [](const auto& r) { return r.attempts > 0 && r.successes == 0; });
    }
};

/// Per-route attempts are seeds routed there; a seed succeeds if any of its tries was accepted.
inline RouteStats compute_stats(const std::vector<SeedRecord>& records)
{
    RouteStats s;
    for (const auto& r : records) {
        auto& route = s.routes[static_cast<std::size_t>(r.paradigm)];
        ++route.attempts;
        ++s.overall.attempts;
        if (r.success) {
            ++route.successes;
            ++s.overall.successes;
        }
    }
    return s;
}

inline nlohmann::json stats_to_json(const RouteStats& s)
{
    auto one = [](const RouteCount& c) {
        const auto rate = c.success_rate();
        return nlohmann::json{{"attempts", c.attempts},
                              {"successes", c.successes},
                              {"failures", c.attempts - c.successes},
                              {"success_rate", rate ? nlohmann::json(*rate) : nlohmann::json(nullptr)}};
    };
    nlohmann::json routes = nlohmann::json::object();
    for (auto p : kParadigms) routes[std::string(to_string(p))] = one(s[p]);
    return {{"routes", routes}, {"overall", one(s.overall)}};
}

// ---------------------------------------------------------------------------
// Synthesis run

struct PipelineInputs {
    std::vector<SeedTriple> seeds;
    std::vector<VirtualTool> base_tools;
    std::vector<Document> corpus;
    std::vector<InteractionPattern> catalog;
};

inline PipelineInputs load_inputs(const PipelineConfig& c)
{
    PipelineInputs in;
    in.seeds = load_seeds_jsonl(c.paths.seeds);
    in.base_tools = load_tools(c.paths.tools);
    if (!c.paths.corpus.empty()) in.corpus = load_corpus_jsonl(c.paths.corpus);
    in.catalog = c.paths.patterns.empty() ? default_catalog() : load_catalog(c.paths.patterns);
    return in;
}

struct SynthesisResult {
    std::vector<Sample> samples; // accepted, in seed order
    std::vector<SeedRecord> records;
    RouteStats stats;
    ToolSet toolset;
};

/// Synthesis plus validation for every seed, with up to `retries` further tries after any
/// failure. Results are in seed order whatever the worker count.
inline SynthesisResult run_synthesis(const PipelineConfig& config, const PipelineInputs& inputs, const ChatBackend& backend)
{
    if (inputs.seeds.empty()) throw ConfigError("no seeds");
    SynthesisResult result;
    result.toolset = build_tool_set(inputs.base_tools, backend,
                                    {config.variants_per_tool, config.max_attempts_per_slot, config.thresholds, {}});

    auto documents = inputs.corpus;
    for (auto& d : gold_documents(inputs.seeds)) documents.push_back(std::move(d));
    const auto index = build_index(std::move(documents), config.bm25.k1, config.bm25.b);
    const ToolShortlister shortlister(result.toolset.tools, config.bm25);

    SynthesisContext ctx;
    ctx.toolset = &result.toolset;
    ctx.shortlister = &shortlister;
    ctx.catalog = &inputs.catalog;
    ctx.corpus = &index;
    ctx.augmentation_k = config.augmentation_k;
    ctx.run_seed = config.run_seed;

    const SeedRegistry registry(inputs.seeds);
    const ValidationContext vctx{&result.toolset, &inputs.catalog, &registry};

    const auto routes = assign_routes(inputs.seeds.size(), config.route_mix, config.run_seed);
    const auto patterns = assign_patterns(routes, inputs.catalog);

    const auto n = inputs.seeds.size();
    std::vector<SeedRecord> records(n);
    std::vector<std::optional<Sample>> samples(n);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto& seed = inputs.seeds[i];
            auto& rec = records[i];
            rec.seed_id = seed.id;
            rec.paradigm = routes[i];
            rec.pattern_id = patterns[i]->id;
            for (std::size_t attempt = 0; attempt <= config.retries && !rec.success; ++attempt) {
                ++rec.attempts;
                try {
                    auto sample = synthesize(seed, *patterns[i], ctx, backend, attempt);
                    const auto report = validate(sample, vctx, &backend, config.validation_mode);
                    if (report.accepted) {
                        rec.success = true;
                        rec.sample_id = sample.id;
                        samples[i] = std::move(sample);
                    } else {
                        std::string detail;
                        for (auto r : kRules) {
                            if (!report.rule[r].pass) {
                                detail = to_string(r) + ": " + report.rule[r].detail;
                                break;
                            }
                        }
                        if (detail.empty() && report.semantic) {
                            for (std::size_t p = 0; p < kPrinciples.size(); ++p) {
                                if (!report.semantic->principles[p].pass) {
                                    detail = std::string(kPrinciples[p].key) + ": " + report.semantic->principles[p].rationale;
                                    break;
                                }
                            }
                        }
                        rec.failures.push_back({attempt, "validation", detail});
                    }
                } catch (const PhaseError& e) {
                    rec.failures.push_back({attempt, e.phase(), e.what()});
                } catch (const Error& e) {
                    rec.failures.push_back({attempt, "validation", e.what()});
                }
            }
        }
    };

    const auto workers = std::min(config.worker_count, n);
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (auto& s : samples) {
        if (s) result.samples.push_back(std::move(*s));
    }
    result.records = std::move(records);
    result.stats = compute_stats(result.records);
    return result;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& r : rows) out << r.dump() << '\n';
}

/// samples.jsonl, records.jsonl, failures.jsonl, stats.json, toolset.json, acceptance_log.jsonl.
inline void write_outputs(const std::filesystem::path& dir, const SynthesisResult& r)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    std::vector<nlohmann::json> rows;
    for (const auto& s : r.samples) rows.push_back(sample_to_json(s));
    write_jsonl(dir / "samples.jsonl", rows);

    rows.clear();
    std::vector<nlohmann::json> failures;
    for (const auto& rec : r.records) {
        rows.push_back(record_to_json(rec));
        for (const auto& f : rec.failures) {
            failures.push_back({{"seed_id", rec.seed_id},
                                {"paradigm", to_string(rec.paradigm)},
                                {"pattern_id", rec.pattern_id},
                                {"attempt", f.attempt},
                                {"phase", f.phase},
                                {"detail", f.detail}});
        }
    }
    write_jsonl(dir / "records.jsonl", rows);
    write_jsonl(dir / "failures.jsonl", failures);

    rows.clear();
    for (const auto& a : r.toolset.acceptance_log) rows.push_back(admission_to_json(a));
    write_jsonl(dir / "acceptance_log.jsonl", rows);

    std::ofstream stats(dir / "stats.json", std::ios::binary);
    stats << stats_to_json(r.stats).dump(2) << '\n';
    std::ofstream tools(dir / "toolset.json", std::ios::binary);
    tools << tools_to_json(r.toolset.tools).dump(2) << '\n';
    if (!stats || !tools) throw IoError("cannot write outputs under " + dir.string());
}

} // namespace toolforge
