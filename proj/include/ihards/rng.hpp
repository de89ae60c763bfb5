#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ihards/errors.hpp"

namespace ihards {

// Deterministic random source used by every randomized stage of the
// pipeline (index draws, shuffles, weight init, dropout, synthetic data).
//
// Generator: xoshiro256** (Blackman & Vigna), state seeded by expanding the
// 64-bit seed through splitmix64. Both algorithms are publicly specified,
// so a given seed yields the same stream on every platform. The standard
// library distributions are deliberately avoided: their output is
// implementation-defined and would break byte-reproducibility.
//
// Sub-streams: derive(tag) produces an independent generator from
// (original seed, tag) only, never from the current position, so stages
// cannot perturb each other by consuming a different number of draws.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            word = detail::splitmix64(sm);
        }
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Uniform integer in [0, bound) without modulo bias (Lemire's method).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) {
            throw ConfigError("SeededRng::below: bound must be positive");
        }
        unsigned __int128 product =
            static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    // Standard normal via Marsaglia's polar method; the spare deviate is
    // cached, so draws come in deterministic pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        have_spare_ = true;
        return u * scale;
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

    // Fisher-Yates, back to front.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    // n distinct indices in [0, pool), uniform, via partial Fisher-Yates.
    std::vector<std::size_t> sample_without_replacement(std::size_t pool,
                                                        std::size_t n) {
        if (n > pool) {
            throw CapacityError(
                "sample_without_replacement: n exceeds pool size");
        }
        std::vector<std::size_t> scratch(pool);
        for (std::size_t i = 0; i < pool; ++i) scratch[i] = i;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(below(pool - i));
            std::swap(scratch[i], scratch[j]);
        }
        scratch.resize(n);
        return scratch;
    }

    std::vector<std::size_t> sample_with_replacement(std::size_t pool,
                                                     std::size_t n) {
        if (pool == 0) {
            throw CapacityError("sample_with_replacement: empty pool");
        }
        std::vector<std::size_t> out(n);
        for (auto& idx : out) idx = static_cast<std::size_t>(below(pool));
        return out;
    }

    // Independent sub-stream keyed by (seed, tag).
    SeededRng derive(std::uint64_t tag) const {
        std::uint64_t sm = seed_ ^ (tag * 0x9e3779b97f4a7c15ULL);
        return SeededRng(detail::splitmix64(sm));
    }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Documented sub-stream tags. All randomness in a run flows from one root
// seed through these; see README for the full derivation scheme.
namespace streams {
constexpr std::uint64_t kClassDraw = 0x100;  // + 8*class + source
constexpr std::uint64_t kRowShuffle = 0x200;
constexpr std::uint64_t kSplit = 0x300;
constexpr std::uint64_t kWeightInit = 0x400;  // + layer index
constexpr std::uint64_t kDropout = 0x500;     // + layer index
constexpr std::uint64_t kSynthetic = 0x600;
constexpr std::uint64_t kEpochShuffle = 0x700;
constexpr std::uint64_t kRepeat = 0x800;  // + repeat index
} // namespace streams

} // namespace ihards
