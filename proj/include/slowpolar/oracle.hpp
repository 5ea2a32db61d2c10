#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "slowpolar/hmm.hpp"
#include "slowpolar/shaping.hpp"
#include "slowpolar/transform.hpp"

// Brute-force ground truth for small instances: exact datum tables by
// enumerating every input completion, exact word posteriors, and a
// state-path enumeration as a second route for the chain recursion. Nothing
// here reuses the decoder-side datum combination code.

namespace slowpolar::oracle {

// A table over (u, s, s'); plain storage, no normalization.
struct DatumTable {
    int states = 0;
    std::vector<double> t;

    explicit DatumTable(int num_states)
        : states(num_states), t(static_cast<std::size_t>(2 * num_states * num_states), 0.0) {}

    double& at(int u, int s, int sp) {
        return t[static_cast<std::size_t>((u * states + s) * states + sp)];
    }
    double at(int u, int s, int sp) const {
        return t[static_cast<std::size_t>((u * states + s) * states + sp)];
    }
};

struct Instance {
    SlowParams params;
    const HmmProcess* process = nullptr;
    Observations y;
    std::uint64_t budget = std::uint64_t{1} << 26; // enumeration work cap
};

namespace detail {

inline void check_budget(const Instance& inst, std::uint64_t work) {
    if (work > inst.budget) throw resource_error("oracle: enumeration budget exceeded");
}

// Entry-state-resolved chain pass over a window with fixed inputs:
// out(s, s') = P(X = x, Y = y, S_last = s' | S_entry = s).
inline void chain_window(const HmmProcess& proc, std::span<const std::uint8_t> x, ObsWindow y,
                         std::vector<double>& out) {
    const int S = proc.num_states();
    std::vector<double> cur(static_cast<std::size_t>(S) * S, 0.0);
    for (int s = 0; s < S; ++s) cur[static_cast<std::size_t>(s * S + s)] = 1.0;
    std::vector<double> next(static_cast<std::size_t>(S) * S);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::optional<int> yi = y ? std::optional<int>((*y)[i]) : std::nullopt;
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < S; ++s)
            for (int t0 = 0; t0 < S; ++t0) {
                const double w = cur[static_cast<std::size_t>(s * S + t0)];
                if (w == 0.0) continue;
                for (int t = 0; t < S; ++t)
                    next[static_cast<std::size_t>(s * S + t)] += w * proc.emission(t0, x[i], yi, t);
            }
        cur.swap(next);
    }
    out = cur;
}

inline void unpack_bits(std::uint64_t word, index_t len, Bits& out) {
    out.resize(static_cast<std::size_t>(len));
    for (index_t i = 0; i < len; ++i)
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((word >> i) & 1u);
}

} // namespace detail

// Conditional datum for branch `branch` of layer `layer`:
//   sum over window inputs x with layer-image prefix matching, of
//   P(V_phase = u, prefix, Y window, S_exit = s' | S_entry = s).
// With layer == n (single branch) this is the top-layer decision table up to
// the entry-state weighting.
inline DatumTable exact_branch_datum(const Instance& inst, int layer, index_t branch, index_t phase,
                                     std::span<const std::uint8_t> branch_prefix) {
    const SlowParams& p = inst.params;
    if (layer < 0 || layer > p.n) throw domain_error("exact_branch_datum: layer out of range");
    const SlowParams sub(p.l0, p.m0, layer);
    const index_t window = sub.total_len();
    if (phase < 0 || phase >= window) throw domain_error("exact_branch_datum: phase out of range");
    if (static_cast<index_t>(branch_prefix.size()) != phase)
        throw domain_error("exact_branch_datum: prefix length mismatch");
    if (branch < 0 || branch >= p.branches(layer))
        throw domain_error("exact_branch_datum: branch out of range");
    if (window >= 63) throw resource_error("oracle: window too wide");
    detail::check_budget(inst, (std::uint64_t{1} << window) * static_cast<std::uint64_t>(window));

    const HmmProcess& proc = *inst.process;
    const int S = proc.num_states();
    ObsWindow yw = std::nullopt;
    std::vector<int> ybuf;
    if (inst.y) {
        const auto begin = inst.y->begin() + static_cast<std::ptrdiff_t>(branch * window);
        ybuf.assign(begin, begin + static_cast<std::ptrdiff_t>(window));
        yw = std::span<const int>(ybuf);
    }

    DatumTable out(S);
    Bits x;
    std::vector<double> chain;
    for (std::uint64_t word = 0; word < (std::uint64_t{1} << window); ++word) {
        detail::unpack_bits(word, window, x);
        const Bits v = forward(sub, x);
        bool match = true;
        for (index_t i = 0; i < phase && match; ++i)
            match = (v[static_cast<std::size_t>(i)] == branch_prefix[static_cast<std::size_t>(i)]);
        if (!match) continue;
        detail::chain_window(proc, x, yw, chain);
        const int u = v[static_cast<std::size_t>(phase)];
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp)
                out.at(u, s, sp) += chain[static_cast<std::size_t>(s * S + sp)];
    }
    return out;
}

// Top-layer joint table in the entry-weighted convention:
//   p(u, s, s') = pi(s) * P(U_phase = u, prefix, Y, S_last = s' | S_entry = s).
inline DatumTable exact_datum(const Instance& inst, std::span<const std::uint8_t> u_prefix,
                              index_t phase) {
    DatumTable cond = exact_branch_datum(inst, inst.params.n, 0, phase, u_prefix);
    const std::vector<double>& pi = inst.process->pi();
    DatumTable out(cond.states);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < cond.states; ++s)
            for (int sp = 0; sp < cond.states; ++sp)
                out.at(u, s, sp) = pi[static_cast<std::size_t>(s)] * cond.at(u, s, sp);
    return out;
}

// Top-layer joint tables for every phase along a fixed decision word, sharing
// one enumeration pass over all inputs.
inline std::vector<DatumTable> exact_top_datums(const Instance& inst,
                                                std::span<const std::uint8_t> u_word) {
    const SlowParams& p = inst.params;
    const index_t N = p.total_len();
    if (static_cast<index_t>(u_word.size()) != N) throw domain_error("exact_top_datums: word length");
    if (N >= 32) throw resource_error("oracle: block too wide");
    detail::check_budget(inst, (std::uint64_t{1} << N) * static_cast<std::uint64_t>(N));

    const HmmProcess& proc = *inst.process;
    const int S = proc.num_states();
    ObsWindow yw = std::nullopt;
    if (inst.y) yw = std::span<const int>(*inst.y);

    std::uint64_t target = 0;
    for (index_t i = 0; i < N; ++i)
        target |= static_cast<std::uint64_t>(u_word[static_cast<std::size_t>(i)] & 1u) << i;

    std::vector<DatumTable> tables(static_cast<std::size_t>(N), DatumTable(S));
    Bits x;
    std::vector<double> chain;
    for (std::uint64_t word = 0; word < (std::uint64_t{1} << N); ++word) {
        detail::unpack_bits(word, N, x);
        const Bits v = forward(p, x);
        std::uint64_t image = 0;
        for (index_t i = 0; i < N; ++i)
            image |= static_cast<std::uint64_t>(v[static_cast<std::size_t>(i)] & 1u) << i;
        detail::chain_window(proc, x, yw, chain);
        // This image contributes to phase tables as long as its prefix agrees
        // with the decision word.
        const std::uint64_t agree = ~(image ^ target);
        for (index_t phi = 0; phi < N; ++phi) {
            if (phi > 0) {
                const std::uint64_t mask = (std::uint64_t{1} << phi) - 1;
                if ((agree & mask) != mask) break;
            }
            const int u = static_cast<int>((image >> phi) & 1u);
            DatumTable& tab = tables[static_cast<std::size_t>(phi)];
            for (int s = 0; s < S; ++s) {
                const double w = proc.pi()[static_cast<std::size_t>(s)];
                if (w == 0.0) continue;
                for (int sp = 0; sp < S; ++sp)
                    tab.at(u, s, sp) += w * chain[static_cast<std::size_t>(s * S + sp)];
            }
        }
    }
    return tables;
}

struct WordPosterior {
    Bits u;
    double joint = 0.0;     // P(X = inverse(u), Y = y)
    double posterior = 0.0; // joint / P(y)
};

// Enumerates every data-phase assignment under the shaping rule and returns
// the words ranked by posterior (ties by data-word value).
inline std::vector<WordPosterior> enumerate_words(const Instance& inst, const ShapingRule& shaping,
                                                  std::uint64_t seed) {
    const SlowParams& p = inst.params;
    const index_t N = p.total_len();
    if (shaping.size() != N) throw domain_error("enumerate_words: shaping size mismatch");
    const index_t d = shaping.num_data_phases();
    if (d > 20) throw resource_error("oracle: too many data phases");
    if (N >= 32) throw resource_error("oracle: block too wide");
    detail::check_budget(inst, (std::uint64_t{1} << std::max<index_t>(d, N)) *
                                   static_cast<std::uint64_t>(N));

    ObsWindow yw = std::nullopt;
    if (inst.y) yw = std::span<const int>(*inst.y);

    // P(y): marginal over every input word.
    double py = 0.0;
    {
        Bits x;
        for (std::uint64_t word = 0; word < (std::uint64_t{1} << N); ++word) {
            detail::unpack_bits(word, N, x);
            py += joint_prob(*inst.process, x, yw);
        }
    }
    if (!(py > 0.0)) throw domain_error("enumerate_words: observations have zero probability");

    std::vector<WordPosterior> out;
    out.reserve(std::size_t{1} << d);
    for (std::uint64_t assign = 0; assign < (std::uint64_t{1} << d); ++assign) {
        ShapingEval eval(shaping, seed);
        Bits u(static_cast<std::size_t>(N));
        index_t next_data = 0;
        for (index_t phi = 0; phi < N; ++phi) {
            int bit;
            if (shaping.kind(phi) == PhaseKind::data) {
                bit = static_cast<int>((assign >> next_data) & 1u);
                ++next_data;
            } else {
                bit = eval.frozen_bit(phi, nullptr, {});
            }
            u[static_cast<std::size_t>(phi)] = static_cast<std::uint8_t>(bit);
            eval.feed(phi, bit);
        }
        WordPosterior wp;
        wp.u = u;
        const Bits x = inverse(p, u);
        wp.joint = joint_prob(*inst.process, x, yw);
        wp.posterior = wp.joint / py;
        out.push_back(std::move(wp));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const WordPosterior& a, const WordPosterior& b) { return a.posterior > b.posterior; });
    return out;
}

inline WordPosterior exact_map_word(const Instance& inst, const ShapingRule& shaping,
                                    std::uint64_t seed) {
    auto words = enumerate_words(inst, shaping, seed);
    if (words.empty()) throw contract_error("exact_map_word: no candidates");
    return words.front();
}

// Second route for the chain recursion: explicit sum over state paths.
inline double joint_prob_pathsum(const HmmProcess& proc, std::span<const std::uint8_t> x,
                                 ObsWindow y) {
    if (y && y->size() != x.size()) throw domain_error("joint_prob_pathsum: length mismatch");
    const int S = proc.num_states();
    const std::size_t len = x.size();
    double total = 0.0;
    std::vector<int> path(len + 1, 0);
    // Odometer over state sequences (s_{-1}, s_0, ..., s_{len-1}).
    while (true) {
        double prob = proc.pi()[static_cast<std::size_t>(path[0])];
        for (std::size_t i = 0; i < len && prob > 0.0; ++i) {
            const std::optional<int> yi = y ? std::optional<int>((*y)[i]) : std::nullopt;
            prob *= proc.emission(path[i], x[i], yi, path[i + 1]);
        }
        total += prob;
        std::size_t pos = 0;
        while (pos <= len && ++path[pos] == S) {
            path[pos] = 0;
            ++pos;
        }
        if (pos > len) break;
    }
    return total;
}

} // namespace slowpolar::oracle
