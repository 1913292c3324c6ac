#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace sb {

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator so the
/// standard <random> distributions can be driven by it.
///
/// Streams are derived from a (seed, stream id) pair through SplitMix64, so
/// that per-chain / per-chunk generators are reproducible regardless of
/// which thread ends up running them.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform double in [0, 1) using the top 53 bits.
    double uniform();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal draw (polar Box-Muller, no cached second value).
    double normal();

private:
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a seed with a sequence of integer labels into a new 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// FNV-1a hash of a short label, used to separate RNG purposes ("data",
/// "chain", ...) under the same user seed.
constexpr std::uint64_t label_hash(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : label) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace sb
