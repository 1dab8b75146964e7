#pragma once

#include <string>
#include <string_view>
#include <array>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/error.hpp"
#include "toolforge/llm_backend.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/text.hpp"
#include "toolforge/tool_space.hpp"

namespace toolforge {

inline constexpr std::string_view kSystemPromptHead = R"(# Role
You are a helpful assistant responsible for answering the user's original question. You are adept at designing complex tool-calling sequences and multi-step reasoning chains. During the reasoning process, you must integrate a reflection mechanism to support self-monitoring, error correction, and dynamic optimization.

# Task Description:
You have three response modes:
- Mode 1: Based on the user's original question, reason about a plan and select the appropriate tool(s) to call.
- Mode 2: Based on the result from a tool, analyze it and decide to proceed with another tool-calling.
- Mode 3: Based on the result from a tool, analyze it and provide the final answer directly.
Interaction Flow:
- Response to a user message: Analyze the original question, formulate a thought process, and call a tool.
- Response to a tool message: Interpret the tool's result and decide whether to continue with tool-calling or to output the final answer.

# Output Structures
You must adhere to one of the following two output structures. Each output must be a direct response to the most recent user or tool message.
1.Structure 1 (Tool-Calling):
<think>Your thought process goes here.</think> + <tool_call>The schema for the tool-calling goes here.</tool_call>
2.Structure 2 (Providing a final answer):
<think>Your thought process goes here.</think> + <answer>Your final answer goes here.</answer>

# Norms for the Thinking Part:
- All outputs must begin with <think> and end with </think>. Keep the thinking process concise, ideally under 200 words. Inside <think>...</think>, you must perform the following steps:
1.Identify the problem type:
- Multi-hop question: State that the problem needs to be decomposed into sub-problems that will be solved through iterative tool-calling. The result of each step will inform the next sub-problem. Finally, all retrieved information will be aggregated to form the final answer.
- Single-hop question: State that only a single round of tool-calling is necessary.
2.Analyze the tool result (if applicable):
- If you are calling another tool, explain how the previous result helps construct the new sub-problem.
- If you are providing the final answer, explain that you have gathered sufficient information to conclude.
3.Perform a reflection check across these dimensions:
- Tool-Calling Consistency: Does the tool selection and parameterization mentioned in <think> match the actual invocation in <tool_call>?
- Logical Coherence: Do the reasoning steps within <think> logically support the subsequent tool-calling or the final answer?
- Answer Consistency: Does the analysis within <think> align with the final answer provided in <answer>?

# Norms for the Tool-Calling Part
Each tool-calling round must use one of the following formats:
1.Single tool-calling format:
<tool_call>\n...\n</tool_call>
2.Multiple tool-calling format:
Use consecutive <tool_call>\n...\n</tool_call> tags, separated by one newline character.

# Norms for the User Response Part
1.When providing the final answer, it must be enclosed in <answer>...</answer> tags.
2.The <answer>...</answer> tag must only contain the final answer itself. Do not include explanations, the reasoning process, or any other text.

# Tools
You may call one or more functions to assist with the user query.

You are provided with function signatures within <tools></tools> XML tags:
)";

inline constexpr std::string_view kSystemPromptTail = R"(
For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:
<tool_call>{"name": <function-name>, "arguments": <args-json-object>}</tool_call>)";

inline std::string system_prompt(std::span<const VirtualTool> tools)
{
    std::string out(kSystemPromptHead);
    out += "<tools>\n";
    for (const auto& t : tools) {
        out += tool_signature(t).dump() + "\n";
    }
    out += "</tools>\n";
    out += kSystemPromptTail;
    return out;
}

inline std::string user_prompt(std::string_view question)
{
    return "The original question from the user is: " + std::string(question);
}

/// Tool-turn text for a retrieved passage list.
inline std::string render_tool_result(const std::vector<Passage>& passages)
{
    if (passages.empty()) {
        return "No relevant documents were found.";
    }
    std::string out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) out += "\n";
        out += "Doc " + std::to_string(i + 1) + " (Title: " + passages[i].title + ") " + passages[i].text;
    }
    return out;
}

/// Arguments for `tool` carrying `query` in its query slot; other required fields get
/// neutral defaults of the declared kind.
inline nlohmann::json fill_arguments(const VirtualTool& tool, std::string_view query)
{
    nlohmann::json args = nlohmann::json::object();
    for (const auto& p : tool.parameters) {
        if (p.role == ParamRole::query) {
            args[p.name] = std::string(query);
            continue;
        }
        if (!p.required) continue;
        switch (p.kind) {
        case ParamKind::string: args[p.name] = tool.domain.empty() ? "general" : tool.domain; break;
        case ParamKind::integer: args[p.name] = 5; break;
        case ParamKind::number: args[p.name] = 1.0; break;
        case ParamKind::boolean: args[p.name] = true; break;
        case ParamKind::string_list: args[p.name] = nlohmann::json::array({tool.domain.empty() ? "general" : tool.domain}); break;
        }
    }
    return args;
}

inline std::string query_of(const VirtualTool& tool, const nlohmann::json& arguments)
{
    const auto* q = tool.query_parameter();
    if (!q || !arguments.is_object() || !arguments.contains(q->name) || !arguments[q->name].is_string()) {
        return {};
    }
    return arguments[q->name].get<std::string>();
}

/// Wraps a JSON payload into a task prompt; completions are parsed from tagged blocks.
inline ChatRequest task_request(std::string tag, std::string_view system, std::string_view instructions,
                                const nlohmann::json& payload, int max_tokens = 4096)
{
    std::string user = std::string(instructions) + "\n\n<input>\n" + payload.dump(1) + "\n</input>";
    return ChatRequest{{{Role::system, std::string(system)}, {Role::user, std::move(user)}}, 0.0, max_tokens, std::move(tag)};
}

/// The JSON payload of a task prompt, or null when the request carries none.
inline nlohmann::json task_payload(const ChatRequest& request)
{
    const auto block = text::extract_block(request.messages.back().content, "input");
    if (!block) return nullptr;
    auto j = nlohmann::json::parse(*block, nullptr, false);
    return j.is_discarded() ? nlohmann::json(nullptr) : j;
}

inline constexpr std::string_view kPlannerSystem =
    "You plan tool-calling traces for multi-hop question answering over virtual retrieval tools.";

inline constexpr std::string_view kPlannerInstructions =
    "Produce the execution trace for the question below. Use the selected tool sequence in order, "
    "one call per slot of the given round structure. Every call needs a concrete query argument and a "
    "ref naming the golden passage it should surface; list golden passages that no call needs under "
    "\"unused\". Reply with a JSON object {\"calls\": [{\"round\", \"slot\", \"tool\", \"arguments\", "
    "\"ref\"}], \"unused\": []} inside <trace></trace> tags.";

inline constexpr std::string_view kWriterSystem =
    "You write assistant turns for tool-calling dialogues that follow a fixed interaction script.";

inline constexpr std::string_view kWriterInstructions =
    "Write the dialogue for the script below. For each scripted step emit <turn role=\"assistant\">...</turn> "
    "containing a <think> block followed by exactly the scripted tool calls, then one <turn role=\"tool\"/> "
    "placeholder per call. Steps marked as failed receive unhelpful results; the next step must reflect on "
    "the failure before correcting it. Ground every factual statement in earlier tool results. Finish with "
    "an assistant turn holding a <think> block and the final <answer>.";

inline constexpr std::string_view kJudgeSystem =
    "You are an expert reviewer of tool-calling dialogues. Judge one principle only.";

inline constexpr std::string_view kRewriterSystem =
    "You write subtly flawed tool-calling dialogues for evaluating dialogue reviewers.";

inline constexpr std::string_view kRewriterInstructions =
    "Rewrite the sample below so that it violates the principle stated here and nothing else. Keep the turn "
    "structure, the tag format, the offered tools and the final answer unchanged, and keep every call "
    "well-formed. Reply with the whole sample as a JSON object inside <sample></sample> tags.";

struct Principle {
    std::string_view key;
    std::string_view statement;
};

inline constexpr std::array<Principle, 3> kPrinciples = {{
    {"tool_calling_correctness",
     "Correctness of tool calling: every call uses an appropriate tool with arguments that fit the sub-problem."},
    {"logical_soundness",
     "Logical soundness of reasoning: each thought follows from the question and earlier results without non-sequiturs."},
    {"thought_action_consistency",
     "Consistency between thought and action: the tools and arguments named in each thought match the calls made."},
}};

} // namespace toolforge
