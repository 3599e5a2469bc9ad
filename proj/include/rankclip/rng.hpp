#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rankclip {

// Deterministic counter-free RNG stream (splitmix64). We roll our own so
// that every draw is bit-identical across standard libraries and platforms;
// std::shuffle / std::normal_distribution are implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller, spare value cached
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so log() stays finite
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // in-place Fisher-Yates
    template <typename T>
    void shuffle(T* v, std::size_t n) {
        if (n < 2) return;
        for (std::size_t i = n - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i + 1));
            T tmp = v[i];
            v[i] = v[j];
            v[j] = tmp;
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001B3ull;
    }
    return h;
}
}  // namespace detail

// Independent stream keyed by (seed, purpose-tag, a, b), e.g. tag "shuffle"
// with (epoch, step). Streams with distinct keys never collide in practice.
inline RngStream derive_stream(std::uint64_t seed, std::string_view tag,
                               std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = detail::mix64(seed ^ 0x243F6A8885A308D3ull);
    s = detail::mix64(s ^ detail::fnv1a(tag));
    s = detail::mix64(s ^ (a * 0x9E3779B97F4A7C15ull + 1));
    s = detail::mix64(s ^ (b * 0xD1B54A32D192ED03ull + 1));
    return RngStream(s);
}

}  // namespace rankclip
