#include <atomic>
#include <thread>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toolforge/llm_backend.hpp"

using namespace toolforge;

namespace {

ChatRequest request(std::string tag, std::string user)
{
    return ChatRequest{{{Role::system, "You are a helpful assistant."}, {Role::user, std::move(user)}}, 0.0, 256, std::move(tag)};
}

std::string fingerprint_bytes(const std::vector<ChatMessage>& ms)
{
    std::string bytes;
    for (const auto& m : ms) {
        bytes += std::string(to_string(m.role));
        bytes += '\x1f';
        bytes += m.content;
        bytes += '\x1e';
    }
    return bytes;
}

} // namespace

TEST(Fingerprint, EmptyIsOffsetBasis)
{
    EXPECT_EQ(fingerprint({}), 0xcbf29ce484222325ULL);
}

TEST(Fingerprint, MatchesHandEvaluation)
{
    const std::vector<ChatMessage> a = {{Role::user, "a"}};
    const std::vector<ChatMessage> b = {{Role::user, "b"}};
    EXPECT_EQ(fingerprint(a), oracle::fnv1a(std::string("user\x1f" "a\x1e")));
    EXPECT_EQ(fingerprint(b), oracle::fnv1a(fingerprint_bytes(b)));
    EXPECT_NE(fingerprint(a), fingerprint(b));
}

TEST(Fingerprint, SeparatorsKeepBoundaries)
{
    const std::vector<ChatMessage> one = {{Role::user, "ab"}};
    const std::vector<ChatMessage> two = {{Role::user, "a"}, {Role::user, "b"}};
    EXPECT_NE(fingerprint(one), fingerprint(two));
}

TEST(Request, ValidationErrors)
{
    ChatRequest r;
    EXPECT_THROW(r.validate(), BadRequest);
    r.messages = {{Role::user, "hi"}};
    EXPECT_THROW(r.validate(), BadRequest);
    r.messages = {{Role::system, ""}};
    EXPECT_THROW(r.validate(), BadRequest);
    r = request("t", "x");
    r.temperature = -1;
    EXPECT_THROW(r.validate(), BadRequest);
    r = request("t", "x");
    r.max_tokens = 0;
    EXPECT_THROW(r.validate(), BadRequest);
    EXPECT_NO_THROW(request("t", "x").validate());
}

TEST(Role, ParseRoundTrip)
{
    for (auto r : {Role::system, Role::user, Role::assistant, Role::tool}) EXPECT_EQ(parse_role(to_string(r)), r);
    EXPECT_THROW(parse_role("robot"), ParseError);
}

TEST(Scripted, LookupByTagAndFingerprint)
{
    const auto planning = request("planning", "plan this");
    BackendScript script;
    script.add("planning", planning.messages, "TRACE{...}");
    ScriptedBackend backend(script);
    EXPECT_EQ(backend.chat(planning), "TRACE{...}");
    EXPECT_EQ(backend.chat(planning), backend.chat(planning));
    // the entry is only served under its own tag
    EXPECT_THROW(backend.chat(request("dialogue", "plan this")), ScriptMiss);
    EXPECT_THROW(backend.chat(request("planning", "other")), ScriptMiss);
}

TEST(Scripted, EchoPolicy)
{
    BackendScript script;
    script.default_policy = BackendScript::DefaultPolicy::echo;
    ScriptedBackend backend(script);
    EXPECT_EQ(backend.chat(request("x", "repeat me")), "repeat me");
}

TEST(Scripted, RejectsInvalidRequests)
{
    ScriptedBackend backend({});
    EXPECT_THROW(backend.chat(ChatRequest{}), BadRequest);
}

TEST(Scripted, ConcurrentCallsAgree)
{
    BackendScript script;
    for (int i = 0; i < 50; ++i) {
        const auto r = request("t", "q" + std::to_string(i));
        script.add("t", r.messages, "a" + std::to_string(i));
    }
    const ScriptedBackend backend(script);
    std::vector<std::thread> threads;
    std::atomic<int> wrong{0};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int k = 0; k < 200; ++k) {
                const int i = (k * 7 + t) % 50;
                if (backend.chat(request("t", "q" + std::to_string(i))) != "a" + std::to_string(i)) ++wrong;
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(wrong.load(), 0);
}

TEST(Script, JsonRoundTrip)
{
    BackendScript script;
    script.add("variant", 0x1234, "hello");
    script.add("planning", 0xcbf29ce484222325ULL, "TRACE");
    const auto back = BackendScript::from_json(script.to_json());
    EXPECT_EQ(back.entries, script.entries);
    EXPECT_EQ(script.to_json()[0]["fingerprint"], "cbf29ce484222325");
}

TEST(Script, MalformedFilesAreParseErrors)
{
    EXPECT_THROW(BackendScript::from_json(nlohmann::json::object()), ParseError);
    EXPECT_THROW(BackendScript::from_json(nlohmann::json::parse(R"([{"tag":"x"}])")), ParseError);
    EXPECT_THROW(BackendScript::from_json(nlohmann::json::parse(R"([{"tag":"x","fingerprint":"zz","completion":""}])")),
                 ParseError);
}

TEST(Overlay, ScriptFirstThenFallback)
{
    BackendScript inner_script;
    inner_script.default_policy = BackendScript::DefaultPolicy::echo;
    auto inner = std::make_shared<ScriptedBackend>(inner_script);
    const auto hit = request("t", "scripted");
    BackendScript top;
    top.add("t", hit.messages, "from overlay");
    OverlayBackend overlay(top, inner);
    EXPECT_EQ(overlay.chat(hit), "from overlay");
    EXPECT_EQ(overlay.chat(request("t", "other")), "other");
}

TEST(Faults, RateTracksProbabilityAndIsStable)
{
    BackendScript s;
    s.default_policy = BackendScript::DefaultPolicy::echo;
    auto inner = std::make_shared<ScriptedBackend>(s);
    FaultInjectingBackend faulty(inner, {{"planning", "", 0.2, "BROKEN"}}, 9);
    int broken = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const auto r = request("planning", "seed " + std::to_string(i));
        const auto out = faulty.chat(r);
        EXPECT_EQ(out, faulty.chat(r));
        broken += out == "BROKEN";
    }
    const auto [lo, hi] = oracle::wilson(static_cast<std::size_t>(broken), n);
    EXPECT_LE(lo, 0.2);
    EXPECT_GE(hi, 0.2);
    // other tags are untouched
    EXPECT_EQ(faulty.chat(request("dialogue", "seed 1")), "seed 1");
}

TEST(Faults, ContainsFilter)
{
    BackendScript s;
    s.default_policy = BackendScript::DefaultPolicy::echo;
    FaultInjectingBackend faulty(std::make_shared<ScriptedBackend>(s), {{"t", "MRMT", 1.0, "X"}}, 1);
    EXPECT_EQ(faulty.chat(request("t", "paradigm MRMT")), "X");
    EXPECT_EQ(faulty.chat(request("t", "paradigm SRST")), "paradigm SRST");
}
