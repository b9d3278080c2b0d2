#include "weavematch/rng.hpp"

#include <cmath>

#include "weavematch/errors.hpp"

namespace weavematch {

uint64_t fnv1a64(const void* data, size_t len, uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t fnv1a64(std::string_view s, uint64_t h) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

namespace {
// splitmix64 finalizer; spreads FNV output over the full 64-bit space.
uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

uint64_t derive_seed(uint64_t root, std::string_view tag) {
    uint64_t h = fnv1a64(&root, sizeof(root));
    h = fnv1a64(tag, h);
    return mix(h);
}

uint64_t derive_seed(uint64_t root, std::string_view tag, uint64_t index) {
    uint64_t h = fnv1a64(&root, sizeof(root));
    h = fnv1a64(tag, h);
    h = fnv1a64(&index, sizeof(index), h);
    return mix(h);
}

uint64_t Rng::uniform_int(uint64_t n) {
    if (n == 0) throw ConfigError("uniform_int: n must be positive");
    // Lemire's multiply-shift with rejection; unbiased and portable.
    __uint128_t m = static_cast<__uint128_t>(eng_()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
        uint64_t t = -n % n;
        while (lo < t) {
            m = static_cast<__uint128_t>(eng_()) * n;
            lo = static_cast<uint64_t>(m);
        }
    }
    return static_cast<uint64_t>(m >> 64);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0,1] x [0,1) uniforms.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

}  // namespace weavematch
