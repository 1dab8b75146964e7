#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/levenshtein.hpp"
#include "toolforge/text.hpp"

using namespace toolforge;

TEST(Fnv, EmptyInputIsOffsetBasis)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
}

TEST(Fnv, MatchesReferenceOnRandomBytes)
{
    std::mt19937 g(11);
    for (int i = 0; i < 200; ++i) {
        std::string s(g() % 64, '\0');
        for (auto& c : s) c = static_cast<char>(g() & 0xFF);
        EXPECT_EQ(fnv1a64(s), oracle::fnv1a(s));
    }
}

TEST(Fnv, IncrementalU64IsLittleEndianBytes)
{
    std::string bytes;
    for (int i = 0; i < 8; ++i) bytes += static_cast<char>((0x0102030405060708ULL >> (8 * i)) & 0xFF);
    EXPECT_EQ(Fnv1a64{}.u64(0x0102030405060708ULL).value(), oracle::fnv1a(bytes));
}

TEST(Hex, RoundTrip)
{
    EXPECT_EQ(to_hex(0xcbf29ce484222325ULL), "cbf29ce484222325");
    EXPECT_EQ(parse_hex("cbf29ce484222325"), 0xcbf29ce484222325ULL);
    EXPECT_EQ(parse_hex("0xFF"), 255u);
    EXPECT_FALSE(parse_hex("xyz"));
    EXPECT_FALSE(parse_hex(""));
    EXPECT_FALSE(parse_hex("12345678901234567"));
}

TEST(Rng, BelowStaysInRangeAndIsSeeded)
{
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.below(7);
        EXPECT_LT(x, 7u);
        EXPECT_EQ(x, b.below(7));
    }
}

TEST(Tokenize, Examples)
{
    EXPECT_TRUE(text::tokenize("").empty());
    EXPECT_EQ(text::tokenize("The cat, the CAT!"), (std::vector<std::string>{"the", "cat", "the", "cat"}));
    EXPECT_EQ(text::tokenize("BM25-v2 rocks"), (std::vector<std::string>{"bm25", "v2", "rocks"}));
}

TEST(Tokenize, LowercasesBeyondAscii)
{
    EXPECT_EQ(text::tokenize("ÉCOLE Straße ΑΘΗΝΑ"), (std::vector<std::string>{"école", "straße", "αθηνα"}));
}

TEST(Text, SentencesAndAnswers)
{
    EXPECT_EQ(text::split_sentences("One. Two!\nThree"), (std::vector<std::string>{"One.", "Two!", "Three"}));
    EXPECT_EQ(text::split_sentences("v1.2 is out."), (std::vector<std::string>{"v1.2 is out."}));
    EXPECT_EQ(text::normalize_answer("<b>The</b> Eiffel   Tower."), "eiffel tower");
    EXPECT_EQ(text::content_tokens("the film of Paris"), (std::vector<std::string>{"film", "paris"}));
}

TEST(Text, ExtractBlock)
{
    EXPECT_EQ(text::extract_block("x <a>inner</a> y", "a"), "inner");
    EXPECT_FALSE(text::extract_block("<a>open only", "a"));
}

TEST(Levenshtein, SmallCases)
{
    EXPECT_EQ(levenshtein("", ""), 0u);
    EXPECT_EQ(levenshtein("abc", ""), 3u);
    EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
    EXPECT_DOUBLE_EQ(normalized_edit_distance("", ""), 0.0);
    EXPECT_DOUBLE_EQ(normalized_edit_distance("ab", "cd"), 1.0);
}

TEST(Levenshtein, MatchesDynamicProgramming)
{
    std::mt19937 g(3);
    for (int it = 0; it < 400; ++it) {
        const int alpha = 1 + static_cast<int>(g() % 20);
        auto rand_string = [&](std::size_t n) {
            std::string s;
            for (std::size_t i = 0; i < n; ++i) s += static_cast<char>('a' + g() % alpha);
            return s;
        };
        const auto a = rand_string(g() % 400);
        auto b = rand_string(g() % 400);
        if (g() % 2) {
            // near-duplicates exercise the diagonal route
            b = a;
            for (int k = static_cast<int>(g() % 12); k > 0 && !b.empty(); --k) {
                const auto p = g() % b.size();
                switch (g() % 3) {
                case 0: b[p] = '#'; break;
                case 1: b.erase(p, 1 + g() % 5); break;
                default: b.insert(p, rand_string(1 + g() % 5)); break;
                }
            }
        }
        ASSERT_EQ(levenshtein(a, b), oracle::levenshtein(a, b)) << a << " | " << b;
    }
}
