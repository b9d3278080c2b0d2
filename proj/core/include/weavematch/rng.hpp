#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace weavematch {

// 64-bit FNV-1a. Used for seed derivation and for content hashing of files
// and configuration records.
uint64_t fnv1a64(const void* data, size_t len,
                 uint64_t h = 14695981039346656037ULL);
uint64_t fnv1a64(std::string_view s, uint64_t h = 14695981039346656037ULL);
// String literals would otherwise prefer the (void*, len) overload above,
// silently treating the seed as a byte count.
inline uint64_t fnv1a64(const char* s, uint64_t h = 14695981039346656037ULL) {
    return fnv1a64(std::string_view(s), h);
}
std::string hex64(uint64_t v);

// Named sub-stream derivation. Every random decision in the pipeline draws
// from a seed built as derive_seed(root, "purpose"[, index]) so that streams
// are independent and runs are reproducible from the single root seed.
uint64_t derive_seed(uint64_t root, std::string_view tag);
uint64_t derive_seed(uint64_t root, std::string_view tag, uint64_t index);

// mt19937_64 with hand-rolled uniform/normal/bounded-int draws. The std::
// distributions are implementation-defined, so we avoid them: these draws
// produce identical sequences on any conforming platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Requires n > 0.
    uint64_t uniform_int(uint64_t n);

    // Standard normal via Box-Muller (second deviate cached).
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

    uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace weavematch
