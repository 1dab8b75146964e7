#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace toolforge {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Incremental FNV-1a 64.
class Fnv1a64 {
public:
    constexpr Fnv1a64& byte(std::uint8_t b) noexcept
    {
        state_ ^= b;
        state_ *= kFnvPrime;
        return *this;
    }

    constexpr Fnv1a64& bytes(std::string_view s) noexcept
    {
        for (char c : s) {
            byte(static_cast<std::uint8_t>(c));
        }
        return *this;
    }

    constexpr Fnv1a64& u64(std::uint64_t v) noexcept
    {
        for (int i = 0; i < 8; ++i) {
            byte(static_cast<std::uint8_t>(v >> (8 * i)));
        }
        return *this;
    }

    [[nodiscard]] constexpr std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = kFnvOffsetBasis;
};

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept { return Fnv1a64{}.bytes(s).value(); }

/// splitmix64 finalizer; spreads FNV output before it is used as a random draw.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Maps 64 random bits onto [0, 1).
constexpr double unit_interval(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline std::string to_hex(std::uint64_t v)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline std::optional<std::uint64_t> parse_hex(std::string_view s)
{
    if (s.starts_with("0x") || s.starts_with("0X")) {
        s.remove_prefix(2);
    }
    if (s.empty() || s.size() > 16) {
        return std::nullopt;
    }
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') {
            v |= static_cast<std::uint64_t>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            v |= static_cast<std::uint64_t>(c - 'a' + 10);
        } else if (c >= 'A' && c <= 'F') {
            v |= static_cast<std::uint64_t>(c - 'A' + 10);
        } else {
            return std::nullopt;
        }
    }
    return v;
}

/// Seeded generator with a portable bounded draw (std distributions differ across
/// standard libraries, mt19937_64 itself does not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % n;
    }

    double uniform() { return unit_interval(engine_()); }

private:
    std::mt19937_64 engine_;
};

} // namespace toolforge
