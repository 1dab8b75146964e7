#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/corpus.hpp"
#include "toolforge/error.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/text.hpp"

namespace toolforge {

// ---------------------------------------------------------------------------
// Virtual tools

enum class ParamKind { string, integer, number, boolean, string_list };
enum class ParamRole { query, filter, other };

inline std::string_view to_string(ParamKind k)
{
    switch (k) {
    case ParamKind::string: return "string";
    case ParamKind::integer: return "integer";
    case ParamKind::number: return "number";
    case ParamKind::boolean: return "boolean";
    case ParamKind::string_list: return "string_list";
    }
    return "?";
}

inline std::string_view to_string(ParamRole r)
{
    switch (r) {
    case ParamRole::query: return "query";
    case ParamRole::filter: return "filter";
    case ParamRole::other: return "other";
    }
    return "?";
}

inline ParamKind parse_param_kind(std::string_view s)
{
    if (s == "string") return ParamKind::string;
    if (s == "integer") return ParamKind::integer;
    if (s == "number") return ParamKind::number;
    if (s == "boolean") return ParamKind::boolean;
    if (s == "string_list") return ParamKind::string_list;
    throw ParseError("unknown parameter kind '" + std::string(s) + "'");
}

inline ParamRole parse_param_role(std::string_view s)
{
    if (s == "query") return ParamRole::query;
    if (s == "filter") return ParamRole::filter;
    if (s == "other") return ParamRole::other;
    throw ParseError("unknown parameter role '" + std::string(s) + "'");
}

/// True when `value` is a JSON value of the declared kind.
inline bool kind_matches(ParamKind kind, const nlohmann::json& value)
{
    switch (kind) {
    case ParamKind::string: return value.is_string();
    case ParamKind::integer: return value.is_number_integer();
    case ParamKind::number: return value.is_number();
    case ParamKind::boolean: return value.is_boolean();
    case ParamKind::string_list:
        return value.is_array()
               && std::all_of(value.begin(), value.end(), [](const auto& v) { return v.is_string(); });
    }
    return false;
}

struct ToolParameterSpec {
    std::string name;
    ParamKind kind = ParamKind::string;
    std::string description;
    bool required = false;
    ParamRole role = ParamRole::other;

    bool operator==(const ToolParameterSpec&) const = default;
};

struct VirtualTool {
    std::string id;
    std::string name;
    std::string description;
    std::vector<ToolParameterSpec> parameters;
    std::string domain;
    std::optional<std::string> base_id;

    bool operator==(const VirtualTool&) const = default;

    const ToolParameterSpec* parameter(std::string_view param_name) const
    {
        for (const auto& p : parameters) {
            if (p.name == param_name) {
                return &p;
            }
        }
        return nullptr;
    }

    const ToolParameterSpec* query_parameter() const
    {
        for (const auto& p : parameters) {
            if (p.role == ParamRole::query) {
                return &p;
            }
        }
        return nullptr;
    }

    /// Invariant violations; empty when the tool is well formed.
    std::vector<std::string> problems() const
    {
        std::vector<std::string> out;
        const bool name_ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
            return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        });
        if (!name_ok) {
            out.push_back("name '" + name + "' must match [a-z0-9_]+");
        }
        if (text::is_blank(description)) {
            out.push_back("empty description");
        }
        std::unordered_set<std::string> names;
        int queries = 0;
        for (const auto& p : parameters) {
            if (!names.insert(p.name).second) {
                out.push_back("duplicate parameter '" + p.name + "'");
            }
            if (p.role == ParamRole::query) {
                ++queries;
            }
        }
        if (queries != 1) {
            out.push_back("expected exactly one query parameter, found " + std::to_string(queries));
        }
        return out;
    }
};

inline nlohmann::json tool_to_json(const VirtualTool& t)
{
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : t.parameters) {
        params.push_back({{"name", p.name},
                          {"kind", to_string(p.kind)},
                          {"description", p.description},
                          {"required", p.required},
                          {"role", to_string(p.role)}});
    }
    nlohmann::json j = {{"name", t.name}, {"description", t.description}, {"domain", t.domain}, {"parameters", params}};
    if (t.id != t.name) {
        j["id"] = t.id;
    }
    if (t.base_id) {
        j["base_id"] = *t.base_id;
    }
    return j;
}

inline VirtualTool tool_from_json(const nlohmann::json& j)
{
    try {
        VirtualTool t;
        t.name = j.at("name").get<std::string>();
        t.id = j.value("id", t.name);
        t.description = j.at("description").get<std::string>();
        t.domain = j.value("domain", std::string{});
        for (const auto& p : j.at("parameters")) {
            t.parameters.push_back({p.at("name").get<std::string>(), parse_param_kind(p.at("kind").get<std::string>()),
                                    p.value("description", std::string{}), p.value("required", false),
                                    parse_param_role(p.value("role", std::string{"other"}))});
        }
        if (j.contains("base_id") && !j.at("base_id").is_null()) {
            t.base_id = j.at("base_id").get<std::string>();
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tool record: ") + e.what());
    }
}

/// Function signature in the shape chat templates expect inside <tools></tools>.
inline nlohmann::json tool_signature(const VirtualTool& t)
{
    nlohmann::json props = nlohmann::json::object();
    nlohmann::json required = nlohmann::json::array();
    for (const auto& p : t.parameters) {
        nlohmann::json prop = {{"description", p.description}};
        switch (p.kind) {
        case ParamKind::string: prop["type"] = "string"; break;
        case ParamKind::integer: prop["type"] = "integer"; break;
        case ParamKind::number: prop["type"] = "number"; break;
        case ParamKind::boolean: prop["type"] = "boolean"; break;
        case ParamKind::string_list:
            prop["type"] = "array";
            prop["items"] = {{"type", "string"}};
            break;
        }
        props[p.name] = prop;
        if (p.required) {
            required.push_back(p.name);
        }
    }
    return {{"type", "function"},
            {"function",
             {{"name", t.name},
              {"description", t.description},
              {"parameters", {{"type", "object"}, {"properties", props}, {"required", required}}}}}};
}

// ---------------------------------------------------------------------------
// Embedding

inline constexpr std::size_t kEmbeddingDim = 256;

struct EmbeddingVector {
    std::array<double, kEmbeddingDim> components{};

    bool is_zero() const
    {
        return std::all_of(components.begin(), components.end(), [](double v) { return v == 0.0; });
    }
};

using Embedder = std::function<EmbeddingVector(std::string_view)>;

/// Character 3-gram counts of the lowercased text hashed into 256 bins, L2-normalized.
inline EmbeddingVector embed(std::string_view input)
{
    EmbeddingVector v;
    if (text::is_blank(input)) {
        return v;
    }
    const auto cps = text::code_points(text::lowercase(input));
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
        std::string gram;
        for (std::size_t j = i; j < i + 3; ++j) {
            text::append_utf8(gram, cps[j]);
        }
        v.components[fnv1a64(gram) % kEmbeddingDim] += 1.0;
    }
    double norm = 0.0;
    for (double c : v.components) {
        norm += c * c;
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& c : v.components) {
            c /= norm;
        }
    }
    return v;
}

inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v)
{
    double dot = 0.0;
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        dot += u.components[i] * v.components[i];
    }
    return std::clamp(dot, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Diversity gate

struct GateThresholds {
    double theta_c = 0.70;
    double theta_b = 0.40;
};

struct GateOptions {
    Embedder embedder = [](std::string_view s) { return embed(s); };
    Bm25Params bm25{};
};

struct GateDecision {
    bool accept = false;
    double agg_cos = 0.0;
    double agg_text = 0.0;
    bool cold_start = false;
};

inline double agg_cos(const VirtualTool& candidate, std::span<const VirtualTool> accepted,
                      const GateOptions& options = {})
{
    if (accepted.empty()) {
        return 0.0;
    }
    const auto c = options.embedder(candidate.description);
    double sum = 0.0;
    for (const auto& t : accepted) {
        sum += cosine(c, options.embedder(t.description));
    }
    return sum / static_cast<double>(accepted.size());
}

inline double agg_text(const VirtualTool& candidate, std::span<const VirtualTool> accepted,
                       const GateOptions& options = {})
{
    if (accepted.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& t : accepted) {
        sum += normalized_text_sim(candidate.description, t.description, options.bm25.k1, options.bm25.b);
    }
    return sum / static_cast<double>(accepted.size());
}

/// Accept iff (|S| < 2 or agg_cos > theta_c) and agg_text < theta_b.
inline GateDecision diversity_gate(const VirtualTool& candidate, std::span<const VirtualTool> accepted,
                                   const GateThresholds& thresholds, const GateOptions& options = {})
{
    GateDecision d;
    d.cold_start = accepted.size() < 2;
    d.agg_cos = agg_cos(candidate, accepted, options);
    d.agg_text = agg_text(candidate, accepted, options);
    d.accept = (d.cold_start || d.agg_cos > thresholds.theta_c) && d.agg_text < thresholds.theta_b;
    return d;
}

// ---------------------------------------------------------------------------
// Tool set

struct AdmissionRecord {
    std::string candidate_id;
    /// "gate", "duplicate-name" or "parse-error".
    std::string reason = "gate";
    bool accepted = false;
    double agg_cos = 0.0;
    double agg_text = 0.0;
    bool cold_start = false;
    /// Size of the accepted set the candidate was gated against.
    std::size_t set_size = 0;
    std::optional<VirtualTool> candidate;
};

struct ToolSet {
    std::vector<VirtualTool> tools;
    std::vector<AdmissionRecord> acceptance_log;

    const VirtualTool* find(std::string_view name) const
    {
        for (const auto& t : tools) {
            if (t.name == name) {
                return &t;
            }
        }
        return nullptr;
    }

    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::size_t size() const noexcept { return tools.size(); }
};

class Exhausted : public Error {
public:
    Exhausted(const std::string& what, ToolSet partial)
        : Error("Exhausted: " + what), partial_(std::move(partial))
    {}
    const ToolSet& partial() const noexcept { return partial_; }

private:
    ToolSet partial_;
};

inline nlohmann::json admission_to_json(const AdmissionRecord& r)
{
    nlohmann::json j = {{"candidate_id", r.candidate_id}, {"reason", r.reason},
                        {"decision", r.accepted ? "accept" : "reject"},
                        {"agg_cos", r.agg_cos}, {"agg_text", r.agg_text},
                        {"cold_start", r.cold_start}, {"set_size", r.set_size}};
    if (r.candidate) {
        j["candidate"] = tool_to_json(*r.candidate);
    }
    return j;
}

inline AdmissionRecord admission_from_json(const nlohmann::json& j)
{
    AdmissionRecord r;
    r.candidate_id = j.at("candidate_id").get<std::string>();
    r.reason = j.value("reason", std::string{"gate"});
    r.accepted = j.at("decision").get<std::string>() == "accept";
    r.agg_cos = j.value("agg_cos", 0.0);
    r.agg_text = j.value("agg_text", 0.0);
    r.cold_start = j.value("cold_start", false);
    r.set_size = j.value("set_size", std::size_t{0});
    if (j.contains("candidate")) {
        r.candidate = tool_from_json(j.at("candidate"));
    }
    return r;
}

inline std::vector<VirtualTool> load_tools(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        throw ParseError(path + ": tool registry must be a JSON array");
    }
    std::vector<VirtualTool> tools;
    for (const auto& e : j) {
        tools.push_back(tool_from_json(e));
    }
    return tools;
}

inline nlohmann::json tools_to_json(std::span<const VirtualTool> tools)
{
    auto arr = nlohmann::json::array();
    for (const auto& t : tools) {
        arr.push_back(tool_to_json(t));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Variant proposal

inline ChatRequest variant_request(const VirtualTool& base, std::size_t variant_index)
{
    const nlohmann::json input = {{"base_tool", tool_to_json(base)}, {"variant_index", variant_index}};
    std::string user =
        "Rewrite the virtual retrieval tool below into a new variant that serves the same intent "
        "with a different name, a reworded description and reworded parameter descriptions. "
        "Keep exactly one parameter with role \"query\". Name the variant with lowercase letters, "
        "digits and underscores only.\n"
        "Return the variant as a single JSON tool record inside <variant></variant> tags.\n\n<input>\n"
        + input.dump(2) + "\n</input>";
    return ChatRequest{{{Role::system, "You are an API designer who writes diverse but faithful tool variants."},
                        {Role::user, std::move(user)}},
                       0.0, 1024, "variant"};
}

/// Asks the backend for one rewrite of `base`; the parsed tool carries base_id = base.id.
inline VirtualTool propose_variant(const VirtualTool& base, const ChatBackend& backend, std::size_t variant_index)
{
    if (base.base_id) {
        throw InvalidTool("'" + base.name + "' is itself a variant");
    }
    const auto completion = backend.chat(variant_request(base, variant_index));
    const auto block = text::extract_block(completion, "variant");
    if (!block) {
        throw ParseError("completion has no <variant> block");
    }
    const auto j = nlohmann::json::parse(*block, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("variant block is not a JSON object");
    }
    VirtualTool tool = tool_from_json(j);
    tool.id = tool.name;
    tool.base_id = base.id;
    if (tool.domain.empty()) {
        tool.domain = base.domain;
    }
    if (const auto problems = tool.problems(); !problems.empty()) {
        throw ParseError("invalid variant: " + problems.front());
    }
    return tool;
}

struct ToolSetOptions {
    std::size_t variants_per_tool = 0;
    std::size_t max_attempts_per_slot = 5;
    GateThresholds thresholds{};
    GateOptions gate{};
};

/// Admits every base, then grows each base's variants through the diversity gate against
/// the growing set. Throws Exhausted (carrying the partial set) when a slot cannot be filled.
inline ToolSet build_tool_set(std::span<const VirtualTool> bases, const ChatBackend& backend,
                              const ToolSetOptions& options)
{
    if (bases.empty()) {
        throw InvalidTool("no base tools");
    }
    ToolSet set;
    for (const auto& b : bases) {
        if (const auto problems = b.problems(); !problems.empty()) {
            throw InvalidTool("base '" + b.name + "': " + problems.front());
        }
        if (b.base_id) {
            throw InvalidTool("base '" + b.name + "' carries a base_id");
        }
        if (set.contains(b.name)) {
            throw InvalidTool("duplicate tool name '" + b.name + "'");
        }
        set.tools.push_back(b);
    }

    for (const auto& base : bases) {
        std::size_t next_index = 0;
        for (std::size_t slot = 0; slot < options.variants_per_tool; ++slot) {
            bool filled = false;
            for (std::size_t attempt = 0; attempt < options.max_attempts_per_slot && !filled; ++attempt) {
                AdmissionRecord rec;
                rec.set_size = set.tools.size();
                VirtualTool candidate;
                try {
                    candidate = propose_variant(base, backend, next_index++);
                } catch (const ParseError& e) {
                    rec.reason = "parse-error";
                    rec.candidate_id = base.name + "#" + std::to_string(next_index - 1);
                    set.acceptance_log.push_back(std::move(rec));
                    continue;
                }
                rec.candidate_id = candidate.id;
                rec.candidate = candidate;
                if (set.contains(candidate.name)) {
                    rec.reason = "duplicate-name";
                    set.acceptance_log.push_back(std::move(rec));
                    continue;
                }
                const auto d = diversity_gate(candidate, set.tools, options.thresholds, options.gate);
                rec.accepted = d.accept;
                rec.agg_cos = d.agg_cos;
                rec.agg_text = d.agg_text;
                rec.cold_start = d.cold_start;
                set.acceptance_log.push_back(std::move(rec));
                if (d.accept) {
                    set.tools.push_back(std::move(candidate));
                    filled = true;
                }
            }
            if (!filled) {
                throw Exhausted("no variant of '" + base.name + "' passed the gate for slot "
                                    + std::to_string(slot + 1) + " within "
                                    + std::to_string(options.max_attempts_per_slot) + " attempts",
                                std::move(set));
            }
        }
    }
    return set;
}

/// Re-runs the logged admissions in order against the same bases; reproduces the set.
inline ToolSet replay_admissions(std::span<const VirtualTool> bases, std::span<const AdmissionRecord> log,
                                 const GateThresholds& thresholds, const GateOptions& options = {})
{
    ToolSet set;
    set.tools.assign(bases.begin(), bases.end());
    for (const auto& rec : log) {
        if (rec.reason != "gate" || !rec.candidate) {
            set.acceptance_log.push_back(rec);
            continue;
        }
        auto replayed = rec;
        const auto d = diversity_gate(*rec.candidate, set.tools, thresholds, options);
        replayed.accepted = d.accept;
        replayed.agg_cos = d.agg_cos;
        replayed.agg_text = d.agg_text;
        replayed.cold_start = d.cold_start;
        replayed.set_size = set.tools.size();
        set.acceptance_log.push_back(replayed);
        if (d.accept) {
            set.tools.push_back(*rec.candidate);
        }
    }
    return set;
}

} // namespace toolforge
