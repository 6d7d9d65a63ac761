#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "permem/text.hpp"

namespace permem {

// SplitMix64 generator. All sampling helpers are implemented here rather than
// through <random> distributions, whose algorithms differ between standard
// libraries; draws must be identical on every platform.
class SeededRng {
public:
    using result_type = std::uint64_t;

    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next(); }

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("SeededRng::below: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    bool coin(double p) { return uniform01() < p; }

    // Index drawn with probability proportional to the (positive) weights.
    std::size_t weighted_index(std::span<const std::uint64_t> weights) {
        std::uint64_t total = 0;
        for (auto w : weights) total += w;
        if (total == 0) throw std::invalid_argument("SeededRng::weighted_index: empty or zero weights");
        std::uint64_t r = below(total);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (r < weights[i]) return i;
            r -= weights[i];
        }
        return weights.size() - 1;
    }

    // Fisher-Yates; the first `count` elements become a uniform sample
    // without replacement.
    template <typename T>
    void partial_shuffle(std::vector<T>& v, std::size_t count) {
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(v[i], v[j]);
        }
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// FNV-1a-64 over the 8 little-endian bytes of the global seed followed by
// the persona UUID bytes.
inline std::uint64_t derive_persona_seed(std::uint64_t global_seed, std::string_view persona_uuid) {
    std::array<unsigned char, 8> seed_bytes{};
    for (std::size_t i = 0; i < 8; ++i) seed_bytes[i] = static_cast<unsigned char>((global_seed >> (8 * i)) & 0xFF);
    const std::uint64_t h = text::fnv1a64(std::span<const unsigned char>(seed_bytes));
    return text::fnv1a64(persona_uuid, h);
}

inline SeededRng persona_rng(std::uint64_t global_seed, std::string_view persona_uuid) {
    return SeededRng(derive_persona_seed(global_seed, persona_uuid));
}

}  // namespace permem
