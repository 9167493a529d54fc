#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mmsvm {

// splitmix64: 64-bit state, one additive step and two xor-shift-multiply
// mixes per draw. Every random choice in the artifact (dataset shuffling,
// stochastic index draws) goes through this generator, so a run is fully
// reproducible from its seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Modulo bias is below n / 2^64, irrelevant at
    // dataset scale.
    std::size_t next_index(std::size_t n) {
        return static_cast<std::size_t>(next() % static_cast<std::uint64_t>(n));
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// In-place Fisher-Yates shuffle driven by the artifact PRNG.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = rng.next_index(i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace mmsvm
