#pragma once

#include <map>
#include <vector>

#include "slowpolar/geometry.hpp"
#include "slowpolar/sc_decoder.hpp"

// Helpers for checking the cyclic-update laws: per layer, the sequence of
// touched brancs must advance by 0 or 1 positions of the bit-reversed cyclic
// order per write.

namespace slowpolar::testsupport {

inline bool advances_cyclically(const std::vector<index_t>& positions, index_t count,
                                bool must_start_at_zero) {
    if (positions.empty()) return true;
    if (must_start_at_zero && positions.front() != 0) return false;
    for (std::size_t i = 1; i < positions.size(); ++i) {
        const index_t prev = positions[i - 1];
        const index_t cur = positions[i];
        if (cur != prev && cur != (prev + 1) % count) return false;
    }
    return true;
}

// Branc positions of per-layer bit writes, in execution order.
inline std::map<int, std::vector<index_t>> bit_write_positions(const SlowParams& params,
                                                               const ScTrace& trace) {
    std::map<int, std::vector<index_t>> out;
    for (const auto& w : trace.bit_writes) {
        const index_t brancs = params.branches(w.layer) / 2;
        if (brancs < 1) continue; // single-branch layer: no branc structure
        out[w.layer].push_back(branc_position(branc_of(w.branch), brancs));
    }
    return out;
}

// Same for datum writes, keeping only main-loop phases after the first.
inline std::map<int, std::vector<index_t>> datum_write_positions(const SlowParams& params,
                                                                 const ScTrace& trace) {
    std::map<int, std::vector<index_t>> out;
    for (const auto& w : trace.datum_writes) {
        if (w.main_phase <= 0) continue;
        const index_t brancs = params.branches(w.layer) / 2;
        if (brancs < 1) continue;
        out[w.layer].push_back(branc_position(branc_of(w.branch), brancs));
    }
    return out;
}

} // namespace slowpolar::testsupport
