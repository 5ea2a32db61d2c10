#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slowpolar/errors.hpp"
#include "slowpolar/util.hpp"

// Index arithmetic for the slow transform: layer sizes, the lateral/medial
// phase partition, phase/branch/flat-index mappings, and the branc ordering
// used by the cyclically-written stores.

namespace slowpolar {

// Transform geometry (l0, m0, n). The base block has n0 = 2*l0 + m0 phases
// and every recursion step doubles the length, so the full length is
// 2^n * n0.
struct SlowParams {
    int l0 = 0;
    int m0 = 2;
    int n = 0;

    SlowParams(int l0_, int m0_, int n_) : l0(l0_), m0(m0_), n(n_) {
        if (l0 < 0) throw domain_error("SlowParams: l0 must be nonnegative");
        if (m0 < 2 || m0 % 2 != 0) throw domain_error("SlowParams: m0 must be even and >= 2");
        if (n < 0) throw domain_error("SlowParams: n must be nonnegative");
        if (n > 40) throw domain_error("SlowParams: n too large");
    }

    index_t base_len() const { return 2 * static_cast<index_t>(l0) + m0; } // n0
    index_t total_len() const { return base_len() << n; }                  // 2^n * n0
    int layers() const { return n + 1; }
    index_t branches(int layer) const { return index_t{1} << (n - layer); }
};

// Per-layer sizes: `lateral` phases on each side, `medial` phases between
// them, `branch_len` phases per branch in total.
struct LayerSizes {
    index_t lateral = 0;    // L_layer
    index_t medial = 0;     // M_layer
    index_t branch_len = 0; // 2 * lateral + medial
};

inline LayerSizes layer_sizes(const SlowParams& p, int layer) {
    if (layer < 0 || layer > p.n) throw domain_error("layer_sizes: layer out of range");
    const index_t pow = index_t{1} << layer;
    LayerSizes ls;
    ls.lateral = pow * (p.l0 + 1) - 1;
    ls.medial = pow * (p.m0 - 2) + 2;
    ls.branch_len = 2 * ls.lateral + ls.medial;
    return ls;
}

enum class PhaseClass { lateral_top, medial_minus, medial_plus, lateral_bottom };

inline const char* to_string(PhaseClass c) {
    switch (c) {
        case PhaseClass::lateral_top: return "lateral_top";
        case PhaseClass::medial_minus: return "medial_minus";
        case PhaseClass::medial_plus: return "medial_plus";
        case PhaseClass::lateral_bottom: return "lateral_bottom";
    }
    return "?";
}

// The first `lateral` phases of a branch are lateral, the next `medial`
// phases alternate minus/plus starting with minus, and the final `lateral`
// phases are lateral again.
inline PhaseClass classify_phase(const SlowParams& p, int layer, index_t phase) {
    const LayerSizes ls = layer_sizes(p, layer);
    if (phase < 0 || phase >= ls.branch_len) throw domain_error("classify_phase: phase out of range");
    if (phase < ls.lateral) return PhaseClass::lateral_top;
    if (phase >= ls.lateral + ls.medial) return PhaseClass::lateral_bottom;
    return ((phase - ls.lateral) % 2 == 0) ? PhaseClass::medial_minus : PhaseClass::medial_plus;
}

inline bool is_lateral(PhaseClass c) {
    return c == PhaseClass::lateral_top || c == PhaseClass::lateral_bottom;
}
inline bool is_medial(PhaseClass c) { return !is_lateral(c); }

// A position inside one layer: phase within the branch plus branch number.
struct PhaseBranch {
    int layer = 0;
    index_t phase = 0;
    index_t branch = 0;
};

inline index_t pb_to_index(const SlowParams& p, const PhaseBranch& pb) {
    const LayerSizes ls = layer_sizes(p, pb.layer);
    if (pb.phase < 0 || pb.phase >= ls.branch_len) throw domain_error("pb_to_index: phase out of range");
    if (pb.branch < 0 || pb.branch >= p.branches(pb.layer))
        throw domain_error("pb_to_index: branch out of range");
    return pb.phase + pb.branch * ls.branch_len;
}

inline PhaseBranch index_to_pb(const SlowParams& p, int layer, index_t index) {
    const LayerSizes ls = layer_sizes(p, layer);
    if (index < 0 || index >= p.total_len()) throw domain_error("index_to_pb: index out of range");
    PhaseBranch pb;
    pb.layer = layer;
    pb.phase = index % ls.branch_len;
    pb.branch = index / ls.branch_len;
    return pb;
}

// A branc is a pair of consecutive branches; branch b belongs to branc b/2.
inline index_t branc_of(index_t branch) {
    if (branch < 0) throw domain_error("branc_of: negative branch");
    return branch / 2;
}

// Brancs listed in bit-reversed cyclic order: entry k of the result is the
// branc whose t-bit expansion is the reversal of k. The successor of the
// last entry is the first.
inline std::vector<index_t> bit_reversed_cyclic_order(index_t num_brancs) {
    if (num_brancs <= 0 || !is_power_of_two(static_cast<std::uint64_t>(num_brancs)))
        throw domain_error("bit_reversed_cyclic_order: count must be a power of two");
    const int t = floor_log2(static_cast<std::uint64_t>(num_brancs));
    std::vector<index_t> order(static_cast<std::size_t>(num_brancs));
    for (index_t k = 0; k < num_brancs; ++k) {
        order[static_cast<std::size_t>(k)] =
            static_cast<index_t>(bit_reverse(static_cast<std::uint64_t>(k), t));
    }
    return order;
}

// Position of a branc in the bit-reversed cyclic order (its own reversal).
inline index_t branc_position(index_t branc, index_t num_brancs) {
    if (branc < 0 || branc >= num_brancs) throw domain_error("branc_position: branc out of range");
    const int t = floor_log2(static_cast<std::uint64_t>(num_brancs));
    return static_cast<index_t>(bit_reverse(static_cast<std::uint64_t>(branc), t));
}

} // namespace slowpolar
