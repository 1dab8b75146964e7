#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toolforge/http_backend.hpp"
#include "toolforge/toolforge.hpp"

namespace fs = std::filesystem;
using namespace toolforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

std::shared_ptr<const ChatBackend> backend_for(const PipelineConfig& config)
{
    if (config.backend.kind == BackendKind::mock) return make_mock_backend(config.backend);
    LiveBackendConfig live;
    live.endpoint = config.backend.endpoint;
    live.model = config.backend.model;
    live.max_in_flight = static_cast<std::ptrdiff_t>(config.worker_count);
    std::shared_ptr<const ChatBackend> backend = std::make_shared<LiveBackend>(LiveBackend::with_environment_key(live));
    if (!config.backend.faults.empty()) {
        backend = std::make_shared<FaultInjectingBackend>(backend, config.backend.faults, config.backend.fault_seed);
    }
    return backend;
}

/// Output stream: the named file, or stdout when the name is empty.
class Sink {
public:
    explicit Sink(const std::string& path)
    {
        if (path.empty()) return;
        file_.open(path, std::ios::binary);
        if (!file_) throw IoError("cannot write " + path);
    }
    std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::vector<Sample> load_samples(const std::string& path)
{
    if (!fs::is_directory(path)) return load_samples_jsonl(path);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Sample> out;
    for (const auto& f : files) {
        for (auto& s : load_samples_jsonl(f.string())) out.push_back(std::move(s));
    }
    return out;
}

struct Context {
    std::optional<PipelineInputs> inputs;
    std::optional<ToolSet> toolset;
    std::optional<SeedRegistry> registry;

    ValidationContext view() const
    {
        return {toolset ? &*toolset : nullptr, inputs ? &inputs->catalog : nullptr, registry ? &*registry : nullptr};
    }
};

/// Validation context from a pipeline config's inputs and its synthesis output toolset.
Context context_for(const std::optional<PipelineConfig>& config)
{
    Context c;
    if (!config) return c;
    c.inputs = load_inputs(*config);
    c.registry.emplace(c.inputs->seeds);
    const auto emitted = fs::path(config->paths.output) / "toolset.json";
    c.toolset.emplace();
    c.toolset->tools = fs::exists(emitted) ? load_tools(emitted.string()) : c.inputs->base_tools;
    return c;
}

int cmd_synth(const std::string& config_path, std::optional<std::size_t> workers)
{
    auto config = load_config(config_path);
    if (workers) {
        config.worker_count = *workers;
        validate_config(config);
    }
    const auto inputs = load_inputs(config);
    const auto backend = backend_for(config);
    const auto result = run_synthesis(config, inputs, *backend);
    write_outputs(config.paths.output, result);
    std::cout << stats_to_json(result.stats).dump(2) << '\n';
    return result.stats.partial_failure() ? kExitPartial : kExitOk;
}

int cmd_validate(const std::string& in, bool full, const std::string& config_path, const std::string& out_path)
{
    std::optional<PipelineConfig> config;
    if (!config_path.empty()) config = load_config(config_path);
    if (full && !config) throw ConfigError("--full needs --config to name the judge backend");
    const auto ctx = context_for(config);
    std::shared_ptr<const ChatBackend> backend;
    if (full) backend = backend_for(*config);
    Sink sink(out_path);
    std::size_t accepted = 0;
    const auto samples = load_samples(in);
    for (const auto& s : samples) {
        const auto report = validate(s, ctx.view(), backend.get(), full ? ValidationMode::full : ValidationMode::rule_only);
        accepted += report.accepted ? 1 : 0;
        sink.out() << report_to_json(s.id, report).dump() << '\n';
    }
    std::cerr << accepted << "/" << samples.size() << " accepted\n";
    return kExitOk;
}

int cmd_mine(const std::string& rule, const std::string& in, const MiningParams& params, const std::string& config_path,
             const std::string& out_path)
{
    std::optional<PipelineConfig> config;
    if (!config_path.empty()) config = load_config(config_path);
    const auto ctx = context_for(config);
    auto p = params;
    p.ctx = ctx.view();
    std::vector<Sample> positives;
    for (auto& s : load_samples(in)) {
        if (rule_check(s, p.ctx).passed()) positives.push_back(std::move(s));
    }
    Sink sink(out_path);
    for (const auto& m : mcts_mine(parse_rule(rule), positives, p)) sink.out() << negative_to_json(m).dump() << '\n';
    return kExitOk;
}

int cmd_bench(const std::string& in, const BenchmarkParams& params, bool model_violations, const std::string& config_path,
              const std::string& out_path)
{
    std::optional<PipelineConfig> config;
    if (!config_path.empty()) config = load_config(config_path);
    if (model_violations && !config) throw ConfigError("--model-violations needs --config to name the backend");
    const auto ctx = context_for(config);
    auto p = params;
    p.ctx = ctx.view();
    std::shared_ptr<const ChatBackend> backend;
    if (model_violations) {
        backend = backend_for(*config);
        p.violation_model = backend.get();
    }
    std::map<std::string, std::vector<Sample>> by_pattern;
    for (auto& s : load_samples(in)) by_pattern[s.pattern_id].push_back(std::move(s));
    const auto items = build_benchmark(by_pattern, p);
    Sink sink(out_path);
    std::map<std::string, std::size_t> tiers;
    for (const auto& it : items) {
        ++tiers[std::string(to_string(it.tier))];
        sink.out() << item_to_json(it).dump() << '\n';
    }
    nlohmann::json summary = tiers;
    summary["total"] = items.size();
    std::cerr << summary.dump() << '\n';
    return kExitOk;
}

int cmd_score(const std::string& bench, const std::string& verdicts_path)
{
    const auto items = load_benchmark_jsonl(bench);
    std::ifstream in(verdicts_path);
    if (!in) throw IoError("cannot open " + verdicts_path);
    std::map<std::string, bool> verdicts;
    std::string line;
    while (std::getline(in, line)) {
        if (text::is_blank(line)) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("sample_id") || !j.contains("accepted")) {
            throw ParseError(verdicts_path + ": verdict lines need sample_id and accepted");
        }
        verdicts[j["sample_id"].get<std::string>()] = j["accepted"].get<bool>();
    }
    std::cout << metrics_to_json(score_validator(items, verdicts)).dump(2) << '\n';
    return kExitOk;
}

int cmd_stats(const std::string& in)
{
    const auto stats = compute_stats(load_records_jsonl(in));
    std::cout << stats_to_json(stats).dump(2) << '\n';
    return stats.partial_failure() ? kExitPartial : kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Synthetic tool-calling dialogue pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::size_t> workers;
    auto* synth = app.add_subcommand("synth", "Synthesize and validate a dataset");
    synth->add_option("--config", config_path, "Pipeline config (JSON)")->required();
    synth->add_option("--workers", workers, "Override worker_count");

    std::string in_path, out_path;
    bool full = false;
    auto* val = app.add_subcommand("validate", "Run the rule layer (and judges with --full)");
    val->add_option("--in", in_path, "Samples JSONL file or directory")->required();
    val->add_flag("--full", full, "Add the three judge verdicts");
    val->add_option("--config", config_path, "Config naming inputs and the judge backend");
    val->add_option("--out", out_path, "Report JSONL (default stdout)");

    std::string rule;
    MiningParams mining;
    auto* mine = app.add_subcommand("mine", "Mine hard negatives for one rule");
    mine->add_option("--rule", rule, "Target rule, R1..R9")->required();
    mine->add_option("--in", in_path, "Positive samples JSONL file or directory")->required();
    mine->add_option("--budget", mining.budget, "Simulations")->capture_default_str();
    mine->add_option("--depth", mining.max_depth, "Maximum corruption steps")->capture_default_str();
    mine->add_option("--seed", mining.seed, "Rollout seed")->capture_default_str();
    mine->add_option("--keep", mining.keep, "Negatives to keep")->capture_default_str();
    mine->add_option("--config", config_path, "Config naming the inputs to validate against");
    mine->add_option("--out", out_path, "Output JSONL (default stdout)");

    BenchmarkParams bench_params;
    bool model_violations = false;
    auto* bench = app.add_subcommand("bench", "Build the three-tier benchmark");
    bench->add_option("--in", in_path, "Samples JSONL file or directory, grouped by pattern")->required();
    bench->add_option("--budget", bench_params.budget, "Simulations per rule and pattern")->capture_default_str();
    bench->add_option("--seed", bench_params.run_seed, "Run seed")->capture_default_str();
    bench->add_option("--per-pattern", bench_params.per_pattern, "Positives per pattern")->capture_default_str();
    bench->add_flag("--model-violations", model_violations, "Ask the configured backend for the semantic negatives");
    bench->add_option("--config", config_path, "Config naming the inputs to validate against");
    bench->add_option("--out", out_path, "Benchmark JSONL (default stdout)");

    std::string bench_path, verdicts_path;
    auto* score = app.add_subcommand("score", "Score validator verdicts against a benchmark");
    score->add_option("--bench", bench_path, "Benchmark JSONL")->required();
    score->add_option("--verdicts", verdicts_path, "JSONL of {sample_id, accepted}")->required();

    auto* stats = app.add_subcommand("stats", "Route success rates from seed records");
    stats->add_option("--in", in_path, "records.jsonl from synth")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*synth) return cmd_synth(config_path, workers);
        if (*val) return cmd_validate(in_path, full, config_path, out_path);
        if (*mine) return cmd_mine(rule, in_path, mining, config_path, out_path);
        if (*bench) return cmd_bench(in_path, bench_params, model_violations, config_path, out_path);
        if (*score) return cmd_score(bench_path, verdicts_path);
        if (*stats) return cmd_stats(in_path);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
