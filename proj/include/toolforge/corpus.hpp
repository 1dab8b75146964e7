#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "toolforge/error.hpp"
#include "toolforge/text.hpp"

namespace toolforge {

using text::tokenize;

struct Document {
    std::string id;
    std::string title;
    std::string body;

    bool operator==(const Document&) const = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::size_t doc = 0;
    std::size_t tf = 0;
};

/// Immutable inverted index over a document list. Both title and body are indexed.
class CorpusIndex {
public:
    CorpusIndex(std::vector<Document> documents, Bm25Params params) : documents_(std::move(documents)), params_(params)
    {
        if (documents_.empty()) {
            throw EmptyCorpus("no documents");
        }
        if (params_.k1 <= 0.0 || params_.b < 0.0 || params_.b > 1.0) {
            throw InvalidDocument("bm25 parameters out of range");
        }
        std::unordered_set<std::string> seen;
        doc_lengths_.reserve(documents_.size());
        std::size_t total = 0;
        for (std::size_t pos = 0; pos < documents_.size(); ++pos) {
            const auto& doc = documents_[pos];
            if (!seen.insert(doc.id).second) {
                throw DuplicateDocId(doc.id);
            }
            if (text::is_blank(doc.body)) {
                throw InvalidDocument("document '" + doc.id + "' has an empty body");
            }
            std::map<std::string, std::size_t> counts;
            const auto terms = indexed_terms(doc);
            for (const auto& t : terms) {
                ++counts[t];
            }
            for (auto& [term, tf] : counts) {
                postings_[term].push_back({pos, tf});
            }
            doc_lengths_.push_back(terms.size());
            total += terms.size();
            by_id_.emplace(doc.id, pos);
        }
        avg_doc_length_ = static_cast<double>(total) / static_cast<double>(documents_.size());
    }

    static std::vector<std::string> indexed_terms(const Document& doc)
    {
        if (doc.title.empty()) {
            return tokenize(doc.body);
        }
        auto terms = tokenize(doc.title);
        auto body = tokenize(doc.body);
        terms.insert(terms.end(), body.begin(), body.end());
        return terms;
    }

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const std::vector<std::size_t>& doc_lengths() const noexcept { return doc_lengths_; }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::size_t size() const noexcept { return documents_.size(); }

    const std::vector<Posting>* postings(const std::string& term) const
    {
        const auto it = postings_.find(term);
        return it == postings_.end() ? nullptr : &it->second;
    }

    std::size_t document_frequency(const std::string& term) const
    {
        const auto* p = postings(term);
        return p ? p->size() : 0;
    }

    std::optional<std::size_t> position_of(const std::string& id) const
    {
        const auto it = by_id_.find(id);
        if (it == by_id_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    double idf(const std::string& term) const
    {
        const auto df = static_cast<double>(document_frequency(term));
        const auto n = static_cast<double>(documents_.size());
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    double term_weight(std::size_t tf, std::size_t doc) const
    {
        const double f = static_cast<double>(tf);
        const double norm = avg_doc_length_ > 0.0
                                ? static_cast<double>(doc_lengths_[doc]) / avg_doc_length_
                                : 1.0;
        return f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
    }

private:
    std::vector<Document> documents_;
    Bm25Params params_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::size_t> doc_lengths_;
    std::unordered_map<std::string, std::size_t> by_id_;
    double avg_doc_length_ = 0.0;
};

inline CorpusIndex build_index(std::vector<Document> documents, double k1 = 1.2, double b = 0.75)
{
    return CorpusIndex(std::move(documents), Bm25Params{k1, b});
}

/// Unique query terms in ascending order; scoring always iterates in this order so that
/// document-at-a-time and term-at-a-time sums agree bit for bit.
inline std::vector<std::string> unique_terms(std::vector<std::string> terms)
{
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

/// Okapi BM25 of one document. Repeated query terms count once.
inline double bm25_score(const CorpusIndex& index, const std::vector<std::string>& query_terms, std::size_t doc)
{
    if (doc >= index.size()) {
        throw IndexOutOfRange("document position " + std::to_string(doc));
    }
    double score = 0.0;
    for (const auto& term : unique_terms(query_terms)) {
        const auto* list = index.postings(term);
        if (!list) {
            continue;
        }
        const auto it = std::lower_bound(list->begin(), list->end(), doc,
                                         [](const Posting& p, std::size_t d) { return p.doc < d; });
        if (it == list->end() || it->doc != doc) {
            continue;
        }
        score += index.idf(term) * index.term_weight(it->tf, doc);
    }
    return score;
}

struct ScoredDocument {
    const Document* document = nullptr;
    std::size_t position = 0;
    double score = 0.0;
};

/// Every document with a positive score, best first; ties go to the smaller id.
inline std::vector<ScoredDocument> rank_all(const CorpusIndex& index, std::string_view query_text)
{
    std::vector<double> scores(index.size(), 0.0);
    std::vector<bool> touched(index.size(), false);
    for (const auto& term : unique_terms(tokenize(query_text))) {
        const auto* list = index.postings(term);
        if (!list) {
            continue;
        }
        const double idf = index.idf(term);
        for (const auto& p : *list) {
            scores[p.doc] += idf * index.term_weight(p.tf, p.doc);
            touched[p.doc] = true;
        }
    }
    std::vector<ScoredDocument> ranked;
    for (std::size_t d = 0; d < index.size(); ++d) {
        if (touched[d] && scores[d] > 0.0) {
            ranked.push_back({&index.documents()[d], d, scores[d]});
        }
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.document->id < b.document->id;
    });
    return ranked;
}

inline std::vector<ScoredDocument> retrieve_top_k(const CorpusIndex& index, std::string_view query_text, std::size_t k)
{
    auto ranked = rank_all(index, query_text);
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    return ranked;
}

/// Textual similarity in [0,1]: BM25 of `a` against `b` divided by `b`'s self-score, both
/// computed on the two-document corpus {a, b}.
inline double normalized_text_sim(std::string_view a, std::string_view b, double k1 = 1.2, double b_param = 0.75)
{
    const auto ta = tokenize(a);
    const auto tb = tokenize(b);

    std::map<std::string, std::size_t> tf_a;
    std::map<std::string, std::size_t> tf_b;
    for (const auto& t : ta) ++tf_a[t];
    for (const auto& t : tb) ++tf_b[t];

    const double avgdl = static_cast<double>(ta.size() + tb.size()) / 2.0;
    const double dl = static_cast<double>(tb.size());
    auto score_against_b = [&](const std::map<std::string, std::size_t>& query) {
        double s = 0.0;
        for (const auto& [term, qtf] : query) {
            const auto hit = tf_b.find(term);
            if (hit == tf_b.end()) {
                continue;
            }
            const double df = tf_a.contains(term) ? 2.0 : 1.0;
            const double idf = std::log(1.0 + (2.0 - df + 0.5) / (df + 0.5));
            const double f = static_cast<double>(hit->second);
            const double norm = avgdl > 0.0 ? dl / avgdl : 1.0;
            s += idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b_param + b_param * norm));
        }
        return s;
    };

    const double denominator = score_against_b(tf_b);
    if (denominator <= 0.0) {
        return tf_a == tf_b ? 1.0 : 0.0;
    }
    const double numerator = score_against_b(tf_a);
    return std::clamp(numerator / denominator, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// JSONL ingestion: {"id", "title", "text"} per line.

inline std::vector<Document> load_corpus_jsonl(std::istream& in, const std::string& source = "<corpus>")
{
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) {
            continue;
        }
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": not a JSON object");
        }
        try {
            docs.push_back({j.at("id").get<std::string>(), j.value("title", std::string{}),
                            j.at("text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

inline std::vector<Document> load_corpus_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return load_corpus_jsonl(in, path);
}

} // namespace toolforge
