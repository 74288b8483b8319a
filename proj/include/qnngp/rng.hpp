#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace qnngp {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

/**
 * Derive a stream key from a global seed and a path of integers
 * (module tag, stream index, ...). Every random stream in the library is
 * keyed this way so results do not depend on thread scheduling.
 */
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    for (auto p : path) {
        h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Module tags for derive_seed.
enum class StreamTag : std::uint64_t {
    Params = 1,
    Shots = 2,
    Noise = 3,
    Ntk = 4,
    Calibration = 5,
    Ensemble = 6,
    Data = 7,
    Family = 8,
    Probe = 9,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) noexcept {
    return derive_seed(seed, {static_cast<std::uint64_t>(tag), a, b});
}

/**
 * Counter-based generator: output n is mix64(key + n * golden).
 * Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
 */
class CounterRng {
  public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform double in [0, 1).
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_{0};
};

} // namespace qnngp
