#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toolforge/corpus.hpp"

using namespace toolforge;

namespace {

CorpusIndex cat_dog()
{
    return build_index({{"d1", "", "the cat sat"}, {"d2", "", "the dog ran far"}});
}

} // namespace

TEST(Index, CountsOneDocument)
{
    const auto idx = build_index({{"x", "", "a b a"}});
    EXPECT_EQ(idx.doc_lengths(), std::vector<std::size_t>{3});
    EXPECT_DOUBLE_EQ(idx.avg_doc_length(), 3.0);
    ASSERT_NE(idx.postings("a"), nullptr);
    EXPECT_EQ(idx.postings("a")->front().tf, 2u);
    EXPECT_EQ(idx.postings("b")->front().tf, 1u);
    EXPECT_EQ(idx.postings("c"), nullptr);
}

TEST(Index, AverageLength)
{
    EXPECT_DOUBLE_EQ(build_index({{"1", "", "a b c"}, {"2", "", "a b c d"}}).avg_doc_length(), 3.5);
}

TEST(Index, Errors)
{
    EXPECT_THROW(build_index({}), EmptyCorpus);
    EXPECT_THROW(build_index({{"1", "", "a"}, {"1", "", "b"}}), DuplicateDocId);
    EXPECT_THROW(build_index({{"1", "", "  "}}), InvalidDocument);
    EXPECT_THROW(build_index({{"1", "", "a"}}, 0.0, 0.75), InvalidDocument);
    EXPECT_THROW(build_index({{"1", "", "a"}}, 1.2, 1.5), InvalidDocument);
}

TEST(Index, TitleIsIndexed)
{
    const auto idx = build_index({{"1", "Paris", "capital city"}});
    EXPECT_EQ(idx.document_frequency("paris"), 1u);
    EXPECT_EQ(idx.doc_lengths()[0], 3u);
}

TEST(Bm25, WorkedExample)
{
    const auto idx = cat_dog();
    const double expected = oracle::bm25({{"the", "cat", "sat"}, {"the", "dog", "ran", "far"}}, {"cat"}, 0, 1.2, 0.75);
    EXPECT_NEAR(bm25_score(idx, {"cat"}, 0), expected, 1e-12);
    EXPECT_NEAR(bm25_score(idx, {"cat"}, 0), 0.7362, 1e-3);
    EXPECT_DOUBLE_EQ(bm25_score(idx, {"cat"}, 1), 0.0);
    EXPECT_DOUBLE_EQ(bm25_score(idx, {"zebra"}, 0), 0.0);
    EXPECT_THROW(bm25_score(idx, {"cat"}, 2), IndexOutOfRange);
}

TEST(Bm25, RepeatedQueryTermsCountOnce)
{
    const auto idx = cat_dog();
    EXPECT_DOUBLE_EQ(bm25_score(idx, {"cat", "cat"}, 0), bm25_score(idx, {"cat"}, 0));
}

TEST(Bm25, MatchesBruteForceOnRandomCorpora)
{
    std::mt19937 g(17);
    const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa"};
    for (int it = 0; it < 200; ++it) {
        const std::size_t n = 1 + g() % 10;
        std::vector<Document> docs;
        std::vector<std::vector<std::string>> tokens;
        for (std::size_t d = 0; d < n; ++d) {
            std::vector<std::string> ts;
            const std::size_t len = 1 + g() % 30;
            std::string body;
            for (std::size_t k = 0; k < len; ++k) {
                ts.push_back(vocab[g() % vocab.size()]);
                body += (k ? " " : "") + ts.back();
            }
            tokens.push_back(ts);
            docs.push_back({"d" + std::to_string(d), "", body});
        }
        const double k1 = 0.5 + (g() % 100) / 50.0;
        const double b = (g() % 101) / 100.0;
        const auto idx = build_index(docs, k1, b);
        std::vector<std::string> query;
        for (std::size_t q = 0, qn = 1 + g() % 4; q < qn; ++q) query.push_back(vocab[g() % vocab.size()]);
        for (std::size_t d = 0; d < n; ++d) {
            ASSERT_NEAR(bm25_score(idx, query, d), oracle::bm25(tokens, query, d, k1, b), 1e-9);
        }
    }
}

TEST(Retrieve, TopKOrderingAndTies)
{
    const auto idx = cat_dog();
    const auto top = retrieve_top_k(idx, "cat", 1);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_EQ(top[0].document->id, "d1");
    EXPECT_TRUE(retrieve_top_k(idx, "zebra", 5).empty());

    const auto tied = build_index({{"b", "", "x y"}, {"a", "", "x y"}, {"c", "", "z"}});
    const auto r = retrieve_top_k(tied, "x", 10);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].document->id, "a");
    EXPECT_EQ(r[1].document->id, "b");
}

TEST(Retrieve, IsPrefixOfFullRanking)
{
    std::vector<Document> docs;
    for (int i = 0; i < 30; ++i) {
        docs.push_back({"d" + std::to_string(i), "", "w" + std::to_string(i % 7) + " w" + std::to_string(i % 5) + " common"});
    }
    const auto idx = build_index(docs);
    const auto all = rank_all(idx, "w1 w3 common");
    for (std::size_t k = 1; k <= all.size(); ++k) {
        const auto top = retrieve_top_k(idx, "w1 w3 common", k);
        ASSERT_EQ(top.size(), k);
        for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(top[i].document->id, all[i].document->id);
    }
    for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(all[i - 1].score, all[i].score);
}

TEST(Retrieve, AllTermsBeatNone)
{
    const auto idx = build_index({{"1", "", "red car fast"}, {"2", "", "blue boat slow"}, {"3", "", "green tree"}});
    EXPECT_GT(bm25_score(idx, {"red", "car"}, 0), bm25_score(idx, {"red", "car"}, 1));
}

TEST(TextSim, Examples)
{
    EXPECT_DOUBLE_EQ(normalized_text_sim("the cat sat", "the cat sat"), 1.0);
    EXPECT_DOUBLE_EQ(normalized_text_sim("alpha beta", "gamma delta"), 0.0);
    const double v = normalized_text_sim("cat sat", "cat sat mat");
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_NEAR(v, oracle::text_sim("cat sat", "cat sat mat"), 1e-12);
}

TEST(TextSim, DegenerateDenominator)
{
    // only an empty b has a zero self-score
    EXPECT_DOUBLE_EQ(normalized_text_sim("", ""), 1.0);
    EXPECT_DOUBLE_EQ(normalized_text_sim("cat", ""), 0.0);
}

TEST(TextSim, MatchesOracleAndStaysInRange)
{
    std::mt19937 g(23);
    const std::vector<std::string> vocab = {"tool", "search", "film", "music", "returns", "passages", "city", "query"};
    for (int it = 0; it < 300; ++it) {
        auto sentence = [&] {
            std::string s;
            for (std::size_t k = 0, n = g() % 12; k < n; ++k) s += vocab[g() % vocab.size()] + " ";
            return s;
        };
        const auto a = sentence();
        const auto b = sentence();
        const double v = normalized_text_sim(a, b);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        ASSERT_NEAR(v, oracle::text_sim(a, b), 1e-12);
        if (!text::is_blank(a)) ASSERT_DOUBLE_EQ(normalized_text_sim(a, a), 1.0);
    }
}

TEST(Jsonl, LoadsCorpus)
{
    std::istringstream in(R"({"id":"1","title":"T","text":"body one"}

{"id":"2","text":"body two"})");
    const auto docs = load_corpus_jsonl(in);
    ASSERT_EQ(docs.size(), 2u);
    EXPECT_EQ(docs[0].title, "T");
    EXPECT_EQ(docs[1].body, "body two");
    std::istringstream bad("{\"id\":1}");
    EXPECT_THROW(load_corpus_jsonl(bad), ParseError);
}
