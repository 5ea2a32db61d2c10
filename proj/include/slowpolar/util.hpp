#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

#include "slowpolar/errors.hpp"

namespace slowpolar {

using Bits = std::vector<std::uint8_t>;
using index_t = std::int64_t;

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline int floor_log2(std::uint64_t v) {
    if (v == 0) throw domain_error("floor_log2: zero argument");
    return 63 - std::countl_zero(v);
}

// Reverses the low `bits` bits of `v`. Bits above that range must be zero.
inline std::uint64_t bit_reverse(std::uint64_t v, int bits) {
    if (bits < 0 || bits > 63) throw domain_error("bit_reverse: bit count out of range");
    if (bits < 64 && (v >> bits) != 0) throw domain_error("bit_reverse: value wider than bit count");
    std::uint64_t r = 0;
    for (int i = 0; i < bits; ++i) {
        r = (r << 1) | ((v >> i) & 1u);
    }
    return r;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based seed derivation: independent streams from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return splitmix64(s);
}

// Thin deterministic wrapper; avoids std distributions so that identical
// seeds give identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    int bit() { return static_cast<int>(eng_() & 1u); }
    // Uniform in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    std::int64_t index(std::int64_t n) {
        if (n <= 0) throw domain_error("Rng::index: nonpositive bound");
        return static_cast<std::int64_t>(eng_() % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 eng_;
};

} // namespace slowpolar
