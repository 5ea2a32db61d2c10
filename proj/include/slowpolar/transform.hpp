#pragma once

#include <vector>

#include "slowpolar/geometry.hpp"

// The slow transform: a bijective GF(2)-linear map on bit vectors, built by
// recursive length doubling. Lateral phases of a layer copy single child
// bits; medial phases combine consecutive phases of the two child branches
// with a minus (xor) / plus (copy) pair.

namespace slowpolar {

namespace detail {

// One doubling step: computes layer `layer` from layer `layer - 1`.
inline void forward_layer(const SlowParams& p, int layer, const Bits& child, Bits& parent) {
    const LayerSizes ls = layer_sizes(p, layer);
    const LayerSizes cs = layer_sizes(p, layer - 1);
    const index_t branches = p.branches(layer);
    for (index_t beta = 0; beta < branches; ++beta) {
        const index_t base = beta * ls.branch_len;
        const index_t a_base = (2 * beta) * cs.branch_len;     // child branch 2*beta
        const index_t b_base = (2 * beta + 1) * cs.branch_len; // child branch 2*beta + 1
        for (index_t phi = 0; phi < ls.branch_len; ++phi) {
            std::uint8_t v;
            switch (classify_phase(p, layer, phi)) {
                case PhaseClass::lateral_top:
                case PhaseClass::lateral_bottom: {
                    const index_t psi = phi / 2;
                    v = child[static_cast<std::size_t>((phi % 2 ? b_base : a_base) + psi)];
                    break;
                }
                case PhaseClass::medial_minus: {
                    const index_t psi_p = (phi - 1) / 2;
                    v = child[static_cast<std::size_t>(a_base + psi_p + 1)] ^
                        child[static_cast<std::size_t>(b_base + psi_p)];
                    break;
                }
                case PhaseClass::medial_plus:
                default: {
                    const index_t psi_p = (phi - 1) / 2;
                    v = (classify_phase(p, layer - 1, psi_p) == PhaseClass::medial_minus)
                            ? child[static_cast<std::size_t>(b_base + psi_p)]
                            : child[static_cast<std::size_t>(a_base + psi_p + 1)];
                    break;
                }
            }
            parent[static_cast<std::size_t>(base + phi)] = v;
        }
    }
}

// Inverse of one doubling step. Medial phases are resolved in minus/plus
// pairs: the plus bit and the minus bit jointly determine both child bits.
inline void inverse_layer(const SlowParams& p, int layer, const Bits& parent, Bits& child) {
    const LayerSizes ls = layer_sizes(p, layer);
    const LayerSizes cs = layer_sizes(p, layer - 1);
    const index_t branches = p.branches(layer);
    for (index_t beta = 0; beta < branches; ++beta) {
        const index_t base = beta * ls.branch_len;
        const index_t a_base = (2 * beta) * cs.branch_len;
        const index_t b_base = (2 * beta + 1) * cs.branch_len;
        for (index_t phi = 0; phi < ls.branch_len; ++phi) {
            const std::uint8_t v = parent[static_cast<std::size_t>(base + phi)];
            switch (classify_phase(p, layer, phi)) {
                case PhaseClass::lateral_top:
                case PhaseClass::lateral_bottom: {
                    const index_t psi = phi / 2;
                    child[static_cast<std::size_t>((phi % 2 ? b_base : a_base) + psi)] = v;
                    break;
                }
                case PhaseClass::medial_minus:
                    break; // resolved together with the plus partner
                case PhaseClass::medial_plus:
                default: {
                    const index_t psi_p = (phi - 1) / 2;
                    const std::uint8_t minus = parent[static_cast<std::size_t>(base + phi - 1)];
                    if (classify_phase(p, layer - 1, psi_p) == PhaseClass::medial_minus) {
                        child[static_cast<std::size_t>(a_base + psi_p + 1)] =
                            static_cast<std::uint8_t>(minus ^ v);
                        child[static_cast<std::size_t>(b_base + psi_p)] = v;
                    } else {
                        child[static_cast<std::size_t>(b_base + psi_p)] =
                            static_cast<std::uint8_t>(minus ^ v);
                        child[static_cast<std::size_t>(a_base + psi_p + 1)] = v;
                    }
                    break;
                }
            }
        }
    }
}

} // namespace detail

inline Bits forward(const SlowParams& p, const Bits& x) {
    if (static_cast<index_t>(x.size()) != p.total_len())
        throw domain_error("forward: input length mismatch");
    Bits cur = x;
    Bits next(x.size());
    for (int layer = 1; layer <= p.n; ++layer) {
        detail::forward_layer(p, layer, cur, next);
        cur.swap(next);
    }
    return cur;
}

inline Bits inverse(const SlowParams& p, const Bits& u) {
    if (static_cast<index_t>(u.size()) != p.total_len())
        throw domain_error("inverse: input length mismatch");
    Bits cur = u;
    Bits next(u.size());
    for (int layer = p.n; layer >= 1; --layer) {
        detail::inverse_layer(p, layer, cur, next);
        cur.swap(next);
    }
    return cur;
}

} // namespace slowpolar
