#pragma once

#include <algorithm>
#include <vector>

#include "slowpolar/sc_decoder.hpp"
#include "slowpolar/scl_decoder.hpp"

// A list decoder with no sharing at all: every path owns a complete
// full-array reference decoder and splits deep-copy everything. Slow, but
// an independent ground truth for the store-sharing implementation: same
// candidate ordering, same pruning rule, same metric arithmetic.

namespace slowpolar::testsupport {

inline std::vector<SclPathResult> reference_list_run(const SlowParams& params,
                                                     const HmmProcess& proc, const Observations& y,
                                                     const ShapingRule& shaping, ListConfig config,
                                                     std::uint64_t seed) {
    struct RefPath {
        ScDecoder core;
        double metric;
        ShapingEval eval;
    };
    std::vector<RefPath> paths;
    paths.push_back({ScDecoder(params, proc, y), 0.0, ShapingEval(shaping, seed)});

    const index_t n_total = params.total_len();
    for (index_t phi = 0; phi < n_total; ++phi) {
        std::vector<std::array<double, 2>> weights;
        weights.reserve(paths.size());
        for (RefPath& p : paths) weights.push_back(p.core.prepare(phi));

        if (shaping.kind(phi) == PhaseKind::frozen) {
            for (std::size_t i = 0; i < paths.size(); ++i) {
                const int bit = paths[i].eval.frozen_bit(phi, &paths[i].core.top_datum(phi), proc.pi());
                paths[i].metric += metric_increment(weights[i], bit);
                paths[i].core.commit(phi, bit);
                paths[i].eval.feed(phi, bit);
            }
            continue;
        }

        struct Cand {
            std::size_t parent;
            int bit;
            double metric;
        };
        std::vector<Cand> cands;
        cands.reserve(paths.size() * 2);
        for (std::size_t i = 0; i < paths.size(); ++i)
            for (int u = 0; u < 2; ++u)
                cands.push_back({i, u, paths[i].metric + metric_increment(weights[i], u)});
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Cand& a, const Cand& b) { return a.metric > b.metric; });
        if (cands.size() > static_cast<std::size_t>(config.list_size))
            cands.resize(static_cast<std::size_t>(config.list_size));

        std::vector<std::size_t> uses(paths.size(), 0);
        for (const Cand& c : cands) ++uses[c.parent];
        std::vector<RefPath> next;
        next.reserve(cands.size());
        for (const Cand& c : cands) {
            if (--uses[c.parent] == 0)
                next.push_back(std::move(paths[c.parent]));
            else
                next.push_back(paths[c.parent]); // full deep copy
            next.back().metric = c.metric;
            next.back().core.commit(phi, c.bit);
            next.back().eval.feed(phi, c.bit);
        }
        paths = std::move(next);
    }

    std::vector<SclPathResult> out;
    out.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        SclPathResult r;
        r.path_id = static_cast<int>(i);
        r.log_metric = paths[i].metric;
        r.u_hat = paths[i].core.u_hat();
        r.x_hat = paths[i].core.x_hat();
        r.crc_ok = true;
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SclPathResult& a, const SclPathResult& b) { return a.log_metric > b.log_metric; });
    return out;
}

} // namespace slowpolar::testsupport
