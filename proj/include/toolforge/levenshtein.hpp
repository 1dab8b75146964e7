#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string_view>
#include <vector>

namespace toolforge {

namespace detail {

/// Diagonal-transition edit distance (Landau-Vishkin). Cost grows with the distance rather than
/// the lengths; gives up and returns nothing once it has spent `work_limit` steps.
/// Requires a.size() <= b.size().
inline std::optional<std::size_t> edit_distance_diagonal(std::string_view a, std::string_view b, std::size_t work_limit)
{
    const auto m = static_cast<std::ptrdiff_t>(a.size());
    const auto n = static_cast<std::ptrdiff_t>(b.size());
    const std::ptrdiff_t goal = n - m;
    constexpr std::ptrdiff_t none = -1;
    // rows indexed by diagonal + offset; diagonals span [-m, n]
    const std::ptrdiff_t offset = m + 1;
    std::vector<std::ptrdiff_t> prev(static_cast<std::size_t>(m + n + 3), none), cur = prev;
    std::size_t work = 0;
    auto slide = [&](std::ptrdiff_t row, std::ptrdiff_t d) {
        while (row < m && row + d < n && a[static_cast<std::size_t>(row)] == b[static_cast<std::size_t>(row + d)]) {
            ++row;
            ++work;
        }
        return row;
    };
    prev[static_cast<std::size_t>(offset)] = slide(0, 0);
    if (goal == 0 && prev[static_cast<std::size_t>(offset)] == m) return 0;
    for (std::ptrdiff_t e = 1;; ++e) {
        const std::ptrdiff_t lo = std::max(-e, -m);
        const std::ptrdiff_t hi = std::min(e, n);
        for (std::ptrdiff_t d = lo; d <= hi; ++d) {
            const auto at = [&](std::ptrdiff_t dd) { return prev[static_cast<std::size_t>(dd + offset)]; };
            std::ptrdiff_t row = none;
            if (at(d) != none) row = at(d) + 1;
            if (d - 1 >= -m && at(d - 1) != none) row = std::max(row, at(d - 1));
            if (d + 1 <= n && at(d + 1) != none) row = std::max(row, at(d + 1) + 1);
            if (row == none) {
                // first reach of this diagonal along the border
                row = d < 0 ? -d : 0;
                if (std::abs(d) > e) continue;
            }
            row = std::min({row, m, n - d});
            row = slide(row, d);
            cur[static_cast<std::size_t>(d + offset)] = row;
            ++work;
            if (d == goal && row == m) return static_cast<std::size_t>(e);
        }
        std::swap(prev, cur);
        if (work > work_limit) return std::nullopt;
    }
}

} // namespace detail

/// Byte-level Levenshtein distance. Common prefixes and suffixes are stripped first; they
/// never change the distance. Near-identical inputs take the diagonal-transition route,
/// everything else Hyyro's bit-parallel formulation over 64-bit blocks.
inline std::size_t levenshtein(std::string_view a, std::string_view b)
{
    while (!a.empty() && !b.empty() && a.front() == b.front()) {
        a.remove_prefix(1);
        b.remove_prefix(1);
    }
    while (!a.empty() && !b.empty() && a.back() == b.back()) {
        a.remove_suffix(1);
        b.remove_suffix(1);
    }
    if (a.size() > b.size()) std::swap(a, b);
    if (a.empty()) return b.size();

    const std::size_t bit_parallel_cost = b.size() * ((a.size() + 63) / 64);
    if (bit_parallel_cost > 4096) {
        if (auto d = detail::edit_distance_diagonal(a, b, bit_parallel_cost / 2)) return *d;
    }

    const std::size_t m = a.size();
    const std::size_t words = (m + 63) / 64;
    std::vector<std::uint64_t> peq(256 * words, 0);
    for (std::size_t i = 0; i < m; ++i) {
        peq[static_cast<unsigned char>(a[i]) * words + i / 64] |= std::uint64_t{1} << (i % 64);
    }
    std::vector<std::uint64_t> vp(words, ~std::uint64_t{0});
    std::vector<std::uint64_t> vn(words, 0);
    const std::uint64_t last = std::uint64_t{1} << ((m - 1) % 64);
    std::size_t dist = m;

    for (char ch : b) {
        const std::uint64_t* pm = &peq[static_cast<unsigned char>(ch) * words];
        std::uint64_t hp_carry = 1;
        std::uint64_t hn_carry = 0;
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint64_t x = pm[w] | hn_carry;
            const std::uint64_t d0 = (((x & vp[w]) + vp[w]) ^ vp[w]) | x | vn[w];
            std::uint64_t hp = vn[w] | ~(d0 | vp[w]);
            std::uint64_t hn = d0 & vp[w];
            const std::uint64_t hp_in = hp_carry;
            const std::uint64_t hn_in = hn_carry;
            if (w + 1 < words) {
                hp_carry = hp >> 63;
                hn_carry = hn >> 63;
            } else {
                hp_carry = (hp & last) ? 1 : 0;
                hn_carry = (hn & last) ? 1 : 0;
            }
            hp = (hp << 1) | hp_in;
            hn = (hn << 1) | hn_in;
            vp[w] = hn | ~(d0 | hp);
            vn[w] = hp & d0;
        }
        dist = dist + hp_carry - hn_carry;
    }
    return dist;
}

/// Levenshtein distance divided by the longer length; 0 for two empty strings.
inline double normalized_edit_distance(std::string_view a, std::string_view b)
{
    const auto longer = std::max(a.size(), b.size());
    return longer == 0 ? 0.0 : static_cast<double>(levenshtein(a, b)) / static_cast<double>(longer);
}

} // namespace toolforge
