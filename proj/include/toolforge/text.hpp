#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace toolforge::text {

// ---------------------------------------------------------------------------
// UTF-8

/// Decodes one code point starting at `pos`, advancing it. Invalid bytes decode
/// as U+FFFD and consume a single byte.
inline char32_t decode_utf8(std::string_view s, std::size_t& pos)
{
    const auto lead = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t i) -> int {
        if (pos + i >= s.size()) {
            return -1;
        }
        const auto c = static_cast<unsigned char>(s[pos + i]);
        return (c & 0xC0) == 0x80 ? (c & 0x3F) : -1;
    };
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    int len = 0;
    char32_t cp = 0;
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    for (int i = 1; i < len; ++i) {
        const int c = cont(static_cast<std::size_t>(i));
        if (c < 0) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    pos += static_cast<std::size_t>(len);
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Simple lowercase mapping for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
/// Other scripts pass through unchanged.
constexpr char32_t to_lower(char32_t c) noexcept
{
    if (c < 0x80) {
        return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    }
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) {
        return c + 32;
    }
    if (c >= 0x100 && c <= 0x137) {
        return (c % 2 == 0) ? c + 1 : c;
    }
    if (c >= 0x139 && c <= 0x148) {
        return (c % 2 == 1) ? c + 1 : c;
    }
    if (c >= 0x14A && c <= 0x177) {
        return (c % 2 == 0) ? c + 1 : c;
    }
    if (c == 0x178) {
        return 0xFF;
    }
    if (c >= 0x179 && c <= 0x17E) {
        return (c % 2 == 1) ? c + 1 : c;
    }
    if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) {
        return c + 32;
    }
    if (c >= 0x410 && c <= 0x42F) {
        return c + 32;
    }
    if (c >= 0x400 && c <= 0x40F) {
        return c + 80;
    }
    return c;
}

/// Letters and digits. Outside ASCII every code point from U+00C0 up is treated as a
/// word character except the common punctuation and symbol blocks.
constexpr bool is_word_char(char32_t c) noexcept
{
    if (c < 0x80) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    }
    if (c < 0xC0 || c == 0xD7 || c == 0xF7) {
        return false;
    }
    if ((c >= 0x2000 && c <= 0x2BFF) || (c >= 0x3000 && c <= 0x303F) || (c >= 0xFE30 && c <= 0xFE4F)
        || (c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) || c == 0xFFFD) {
        return false;
    }
    return true;
}

constexpr bool is_space(char32_t c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0xA0;
}

inline std::string lowercase(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        append_utf8(out, to_lower(decode_utf8(s, pos)));
    }
    return out;
}

inline std::vector<char32_t> code_points(std::string_view s)
{
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        out.push_back(decode_utf8(s, pos));
    }
    return out;
}

/// Lowercased terms split on runs of non-alphanumeric characters.
inline std::vector<std::string> tokenize(std::string_view s)
{
    std::vector<std::string> terms;
    std::string current;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const char32_t c = decode_utf8(s, pos);
        if (is_word_char(c)) {
            append_utf8(current, to_lower(c));
        } else if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        terms.push_back(std::move(current));
    }
    return terms;
}

inline bool is_blank(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), [](char c) {
        return is_space(static_cast<unsigned char>(c));
    });
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

inline bool contains(std::string_view haystack, std::string_view needle)
{
    return haystack.find(needle) != std::string_view::npos;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to)
{
    if (from.empty()) {
        return s;
    }
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

/// Splits on '.', '!' or '?' followed by whitespace or end of text, and on newlines.
/// Terminators stay attached to their sentence; empty pieces are dropped.
inline std::vector<std::string> split_sentences(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        const auto piece = trim(s.substr(start, end - start));
        if (!piece.empty()) {
            out.emplace_back(piece);
        }
        start = end;
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '\n') {
            flush(i);
            start = i + 1;
        } else if ((c == '.' || c == '!' || c == '?')
                   && (i + 1 == s.size() || is_space(static_cast<unsigned char>(s[i + 1])))) {
            flush(i + 1);
        }
    }
    flush(s.size());
    return out;
}

inline const std::unordered_set<std::string>& stopwords()
{
    static const std::unordered_set<std::string> words = {
        "a",     "an",    "the",   "and",   "or",    "but",   "if",    "of",    "to",    "in",
        "on",    "at",    "by",    "for",   "with",  "from",  "as",    "is",    "are",   "was",
        "were",  "be",    "been",  "being", "it",    "its",   "this",  "that",  "these", "those",
        "he",    "she",   "they",  "them",  "his",   "her",   "their", "we",    "you",   "i",
        "me",    "my",    "our",   "your",  "not",   "no",    "so",    "than",  "then",  "there",
        "which", "who",   "whom",  "what",  "when",  "where", "how",   "why",   "do",    "does",
        "did",   "has",   "have",  "had",   "will",  "would", "can",   "could", "should", "may",
        "might", "must",  "into",  "about", "also",  "such",  "s",     "t",     "all",   "any"};
    return words;
}

/// Tokens with stopwords removed.
inline std::vector<std::string> content_tokens(std::string_view s)
{
    auto tokens = tokenize(s);
    const auto& stop = stopwords();
    std::erase_if(tokens, [&](const std::string& t) { return stop.contains(t); });
    return tokens;
}

/// Answer normalization: strip markup tags, lowercase, drop punctuation and the articles
/// a/an/the, collapse whitespace.
inline std::string normalize_answer(std::string_view s)
{
    std::string untagged;
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
        } else if (c == '>' && in_tag) {
            in_tag = false;
            untagged.push_back(' ');
        } else if (!in_tag) {
            untagged.push_back(c);
        }
    }
    auto tokens = tokenize(untagged);
    std::erase_if(tokens, [](const std::string& t) { return t == "a" || t == "an" || t == "the"; });
    return join(tokens, " ");
}

/// Content between the first `<tag>` and the following `</tag>`, if both exist.
inline std::optional<std::string_view> extract_block(std::string_view s, std::string_view tag)
{
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto begin = s.find(open);
    if (begin == std::string_view::npos) {
        return std::nullopt;
    }
    const auto content = begin + open.size();
    const auto end = s.find(close, content);
    if (end == std::string_view::npos) {
        return std::nullopt;
    }
    return s.substr(content, end - content);
}

} // namespace toolforge::text
