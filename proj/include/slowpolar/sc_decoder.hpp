#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "slowpolar/branch_engine.hpp"
#include "slowpolar/datum.hpp"
#include "slowpolar/geometry.hpp"
#include "slowpolar/hmm.hpp"
#include "slowpolar/shaping.hpp"
#include "slowpolar/transform.hpp"

// Reference successive-cancellation decoder with full phase-indexed
// per-layer arrays. One bit-decision array and one probabilities array per
// layer, a two-slot tracker per layer below the top, and the recursive
// datum pass driven by the tracker entries of the previous main-loop
// iteration. This is the readable baseline the store-sharing list decoder
// is differentially tested against.

namespace slowpolar {

struct ScTrace {
    struct BitWrite {
        int layer;
        index_t phase;
        index_t branch;
        int bit;
        index_t main_phase;
    };
    struct DatumWrite {
        int layer;
        index_t phase; // layer branch length marks the zeroing of the final datum
        index_t branch;
        index_t main_phase;
    };
    std::vector<BitWrite> bit_writes;
    std::vector<DatumWrite> datum_writes;
    bool capture_datums = false;
    std::vector<ProbDatum> datums; // parallel to datum_writes when captured
};

class ScDecoder {
public:
    ScDecoder(const SlowParams& params, const HmmProcess& proc, Observations y,
              ScTrace* trace = nullptr)
        : params_(params), proc_(&proc), trace_(trace) {
        const index_t n0 = params_.base_len();
        if (y && static_cast<index_t>(y->size()) != params_.total_len())
            throw domain_error("ScDecoder: observation length mismatch");

        sizes_.reserve(static_cast<std::size_t>(params_.layers()));
        for (int layer = 0; layer <= params_.n; ++layer) sizes_.push_back(layer_sizes(params_, layer));

        const std::size_t total = static_cast<std::size_t>(params_.total_len());
        bits_.assign(static_cast<std::size_t>(params_.layers()), std::vector<std::int8_t>(total, -1));
        probs_.assign(static_cast<std::size_t>(params_.layers()), std::vector<ProbDatum>(total));
        stamps_.assign(static_cast<std::size_t>(params_.layers()), std::vector<index_t>(total, kNoStamp));
        latest_datum_.resize(static_cast<std::size_t>(params_.layers()));
        for (int layer = 0; layer <= params_.n; ++layer)
            latest_datum_[static_cast<std::size_t>(layer)].assign(
                static_cast<std::size_t>(params_.branches(layer)), -1);
        tracker_.assign(static_cast<std::size_t>(params_.n), {});

        // Per-branch window engines and their phase-0 datums.
        const index_t branches = params_.branches(0);
        engines_.reserve(static_cast<std::size_t>(branches));
        for (index_t beta = 0; beta < branches; ++beta) {
            ObsWindow w = std::nullopt;
            if (y) w = std::span<const int>(*y).subspan(static_cast<std::size_t>(beta * n0),
                                                        static_cast<std::size_t>(n0));
            engines_.emplace_back(proc, w, n0);
            store_datum(0, 0, beta, engines_.back().update_base_probs(0, std::nullopt));
        }
    }

    index_t total_len() const { return params_.total_len(); }
    const SlowParams& params() const { return params_; }

    // Runs the recursive datum pass for the next main-loop phase and
    // returns the decision weights w(u) = sum_{s,s'} pi(s) d(u,s,s').
    std::array<double, 2> prepare(index_t phase) {
        if (phase != next_phase_) throw contract_error("ScDecoder: phases must be decoded in order");
        iter_ = phase;
        calc_p(params_.n, phase, 0);
        return decision_weights(top_datum(phase), proc_->pi());
    }

    // Top-layer datum for the given phase; valid after prepare(phase).
    const ProbDatum& top_datum(index_t phase) const {
        return probs_[static_cast<std::size_t>(params_.n)][static_cast<std::size_t>(phase)];
    }

    // Records the decision for the prepared phase and propagates it.
    void commit(index_t phase, int bit) {
        if (phase != next_phase_) throw contract_error("ScDecoder: commit out of order");
        set_bit(params_.n, phase, 0, bit);
        reset_tracker();
        update_b(params_.n, phase, 0);
        ++next_phase_;
    }

    bool finished() const { return next_phase_ == params_.total_len(); }

    Bits u_hat() const { return collect_layer(params_.n); }
    Bits x_hat() const { return collect_layer(0); }

    int bit_at(int layer, index_t phase, index_t branch) const {
        const std::int8_t v =
            bits_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(flat(layer, phase, branch))];
        if (v < 0) throw contract_error("ScDecoder: bit not set");
        return v;
    }

    index_t latest_datum_phase(int layer, index_t branch) const {
        return latest_datum_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(branch)];
    }

    const ProbDatum& datum_at(int layer, index_t phase, index_t branch) const {
        return probs_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(flat(layer, phase, branch))];
    }

private:
    static constexpr index_t kNoStamp = -2;

    index_t flat(int layer, index_t phase, index_t branch) const {
        return phase + branch * sizes_[static_cast<std::size_t>(layer)].branch_len;
    }

    Bits collect_layer(int layer) const {
        const auto& arr = bits_[static_cast<std::size_t>(layer)];
        Bits out(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (arr[i] < 0) throw contract_error("ScDecoder: run not finished");
            out[i] = static_cast<std::uint8_t>(arr[i]);
        }
        return out;
    }

    void reset_tracker() {
        for (auto& t : tracker_) t = {};
    }

    void set_bit(int layer, index_t phase, index_t branch, int bit) {
        std::int8_t& slot =
            bits_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(flat(layer, phase, branch))];
        if (slot >= 0) throw contract_error("ScDecoder: bit-decision slot rewritten");
        slot = static_cast<std::int8_t>(bit);
        if (trace_) trace_->bit_writes.push_back({layer, phase, branch, bit, iter_});
    }

    void store_datum(int layer, index_t phase, index_t branch, ProbDatum d) {
        const index_t f = flat(layer, phase, branch);
        probs_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)] = std::move(d);
        stamps_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)] = iter_;
        latest_datum_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(branch)] = phase;
        if (trace_) {
            trace_->datum_writes.push_back({layer, phase, branch, iter_});
            if (trace_->capture_datums)
                trace_->datums.push_back(
                    probs_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)]);
        }
    }

    // Algorithm: recursive datum pass. Case order matters: the after-last
    // zeroing first, then the layer-0 base update, then the phase-0 full
    // descent, then the tracker-driven advance.
    void calc_p(int layer, index_t phase, index_t branch) {
        const LayerSizes& ls = sizes_[static_cast<std::size_t>(layer)];

        if (phase == ls.branch_len) {
            // One past the last phase: keep only the decided final bit.
            const index_t f = flat(layer, ls.branch_len - 1, branch);
            auto& lat = latest_datum_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(branch)];
            if (lat == ls.branch_len) return; // already zeroed
            if (lat != ls.branch_len - 1) throw contract_error("ScDecoder: zeroing before final datum");
            const int decided = bit_at(layer, ls.branch_len - 1, branch);
            probs_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)] =
                retain_decided(probs_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)], decided);
            stamps_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)] = iter_;
            lat = ls.branch_len;
            if (trace_) {
                trace_->datum_writes.push_back({layer, ls.branch_len, branch, iter_});
                if (trace_->capture_datums)
                    trace_->datums.push_back(
                        probs_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)]);
            }
            return;
        }

        if (layer == 0) {
            if (phase > 0) {
                const index_t f = flat(0, phase, branch);
                if (stamps_[0][static_cast<std::size_t>(f)] == iter_) return; // visited twice this iteration
                const int prev = bit_at(0, phase - 1, branch);
                store_datum(0, phase, branch,
                            engines_[static_cast<std::size_t>(branch)].update_base_probs(phase, prev));
            }
            return;
        }

        if (phase == 0) {
            calc_p(layer - 1, 0, 2 * branch);
            calc_p(layer - 1, 0, 2 * branch + 1);
        } else {
            for (const auto& entry : tracker_[static_cast<std::size_t>(layer - 1)]) {
                if (!entry) continue;
                calc_p(layer - 1, entry->first + 1, entry->second);
            }
        }

        const index_t f = flat(layer, phase, branch);
        if (stamps_[static_cast<std::size_t>(layer)][static_cast<std::size_t>(f)] == iter_) return;
        store_datum(layer, phase, branch, combine_for(layer, phase, branch));
        return;
    }

    // Child datum of branch `child` at its latest phase (zeroed form once the
    // branch is complete), plus the count of decided symbols it encodes.
    const ProbDatum& latest_child(int child_layer, index_t child, index_t& decided) const {
        const LayerSizes& cs = sizes_[static_cast<std::size_t>(child_layer)];
        const index_t lat =
            latest_datum_[static_cast<std::size_t>(child_layer)][static_cast<std::size_t>(child)];
        if (lat < 0) throw contract_error("ScDecoder: child datum missing");
        decided = lat;
        const index_t phase = std::min(lat, cs.branch_len - 1);
        return probs_[static_cast<std::size_t>(child_layer)]
                     [static_cast<std::size_t>(flat(child_layer, phase, child))];
    }

    ProbDatum combine_for(int layer, index_t phase, index_t branch) {
        const index_t even_child = 2 * branch;
        const index_t odd_child = 2 * branch + 1;
        switch (classify_phase(params_, layer, phase)) {
            case PhaseClass::lateral_top:
            case PhaseClass::lateral_bottom: {
                const index_t psi = phase / 2;
                const bool host_even = (phase % 2 == 0);
                const index_t host = host_even ? even_child : odd_child;
                const index_t other = host_even ? odd_child : even_child;
                if (latest_datum_[static_cast<std::size_t>(layer - 1)][static_cast<std::size_t>(host)] != psi)
                    throw contract_error("ScDecoder: hosting child out of phase");
                index_t other_decided = 0;
                const ProbDatum& od = latest_child(layer - 1, other, other_decided);
                if (other_decided != phase - psi)
                    throw contract_error("ScDecoder: lateral phase alignment broken");
                const ProbDatum& hd = probs_[static_cast<std::size_t>(layer - 1)]
                                            [static_cast<std::size_t>(flat(layer - 1, psi, host))];
                return host_even ? combine_lateral(hd, od, true) : combine_lateral(hd, od, false);
            }
            case PhaseClass::medial_minus: {
                const index_t psi_p = (phase - 1) / 2;
                check_child_phase(layer - 1, even_child, psi_p + 1);
                check_child_phase(layer - 1, odd_child, psi_p);
                return combine_medial_minus(child_datum(layer - 1, psi_p + 1, even_child),
                                            child_datum(layer - 1, psi_p, odd_child));
            }
            case PhaseClass::medial_plus:
            default: {
                const index_t psi_p = (phase - 1) / 2;
                check_child_phase(layer - 1, even_child, psi_p + 1);
                check_child_phase(layer - 1, odd_child, psi_p);
                const int delta = bit_at(layer, phase - 1, branch);
                const bool minus_side =
                    classify_phase(params_, layer - 1, psi_p) == PhaseClass::medial_minus;
                return combine_medial_plus(child_datum(layer - 1, psi_p + 1, even_child),
                                           child_datum(layer - 1, psi_p, odd_child), delta, minus_side);
            }
        }
    }

    void check_child_phase(int child_layer, index_t child, index_t phase) const {
        if (latest_datum_[static_cast<std::size_t>(child_layer)][static_cast<std::size_t>(child)] != phase)
            throw contract_error("ScDecoder: medial child out of phase");
    }

    const ProbDatum& child_datum(int child_layer, index_t phase, index_t child) const {
        return probs_[static_cast<std::size_t>(child_layer)]
                     [static_cast<std::size_t>(flat(child_layer, phase, child))];
    }

    // Algorithm: resolves the transform equations downwards after a bit
    // decision. Minus phases wait for their plus partner; plus phases write
    // both children and descend twice.
    void update_b(int layer, index_t phase, index_t branch) {
        if (layer == 0) return;
        const PhaseClass cls = classify_phase(params_, layer, phase);
        if (cls == PhaseClass::medial_minus) return;

        const int value = bit_at(layer, phase, branch);
        if (is_lateral(cls)) {
            const index_t psi = phase / 2;
            const index_t child = 2 * branch + (phase % 2);
            set_bit(layer - 1, psi, child, value);
            tracker_[static_cast<std::size_t>(layer - 1)][0] = {{psi, child}};
            update_b(layer - 1, psi, child);
            return;
        }

        // Medial plus: the pair (phase-1, phase) fixes both child symbols.
        const index_t psi_p = (phase - 1) / 2;
        const int delta = bit_at(layer, phase - 1, branch);
        const index_t even_child = 2 * branch;
        const index_t odd_child = 2 * branch + 1;
        if (classify_phase(params_, layer - 1, psi_p) == PhaseClass::medial_minus) {
            set_bit(layer - 1, psi_p + 1, even_child, value ^ delta);
            set_bit(layer - 1, psi_p, odd_child, value);
        } else {
            set_bit(layer - 1, psi_p, odd_child, value ^ delta);
            set_bit(layer - 1, psi_p + 1, even_child, value);
        }
        tracker_[static_cast<std::size_t>(layer - 1)][0] = {{psi_p, odd_child}};
        tracker_[static_cast<std::size_t>(layer - 1)][1] = {{psi_p + 1, even_child}};
        update_b(layer - 1, psi_p, odd_child);
        update_b(layer - 1, psi_p + 1, even_child);
    }

    SlowParams params_;
    const HmmProcess* proc_;
    ScTrace* trace_ = nullptr;
    std::vector<LayerSizes> sizes_;
    std::vector<BranchEngine> engines_;
    std::vector<std::vector<std::int8_t>> bits_;
    std::vector<std::vector<ProbDatum>> probs_;
    std::vector<std::vector<index_t>> stamps_;
    std::vector<std::vector<index_t>> latest_datum_; // layer branch length once zeroed
    std::vector<std::array<std::optional<std::pair<index_t, index_t>>, 2>> tracker_;
    index_t next_phase_ = 0;
    index_t iter_ = -1;
};

inline int decide_map(const std::array<double, 2>& w) { return w[1] > w[0] ? 1 : 0; }

enum class ScMode { decode, encode };

struct ScResult {
    Bits u_hat;
    Bits x_hat;
};

// One full successive-cancellation pass. Decode mode picks the MAP bit at
// data phases; encode mode (absent observations) places the message bits
// there. Shaping phases always take the rule's bit.
inline ScResult sc_run(const SlowParams& params, const HmmProcess& proc, const Observations& y,
                       const ShapingRule& shaping, ScMode mode,
                       std::span<const std::uint8_t> message, std::uint64_t seed,
                       ScTrace* trace = nullptr) {
    if (shaping.size() != params.total_len()) throw domain_error("sc_run: shaping size mismatch");
    if (mode == ScMode::encode && y) throw domain_error("sc_run: encode mode expects absent observations");
    if (mode == ScMode::encode &&
        static_cast<index_t>(message.size()) != shaping.num_data_phases())
        throw domain_error("sc_run: message length mismatch");

    ScDecoder dec(params, proc, y, trace);
    ShapingEval eval(shaping, seed);
    std::size_t next_message = 0;
    for (index_t phi = 0; phi < params.total_len(); ++phi) {
        const auto w = dec.prepare(phi);
        int bit;
        if (shaping.kind(phi) == PhaseKind::frozen) {
            bit = eval.frozen_bit(phi, &dec.top_datum(phi), proc.pi());
        } else if (mode == ScMode::decode) {
            bit = decide_map(w);
        } else {
            bit = message[next_message++];
        }
        dec.commit(phi, bit);
        eval.feed(phi, bit);
    }
    return {dec.u_hat(), dec.x_hat()};
}

// Genie-aided pass: decodes with every decision forced to the true bit and
// reports, per phase, whether the MAP guess disagreed. Used for code
// construction.
inline std::vector<std::uint8_t> sc_run_genie(const SlowParams& params, const HmmProcess& proc,
                                              const Observations& y,
                                              std::span<const std::uint8_t> true_u) {
    if (static_cast<index_t>(true_u.size()) != params.total_len())
        throw domain_error("sc_run_genie: word length mismatch");
    ScDecoder dec(params, proc, y);
    std::vector<std::uint8_t> mismatch(true_u.size(), 0);
    for (index_t phi = 0; phi < params.total_len(); ++phi) {
        const auto w = dec.prepare(phi);
        const int guess = decide_map(w);
        const int truth = true_u[static_cast<std::size_t>(phi)];
        mismatch[static_cast<std::size_t>(phi)] = static_cast<std::uint8_t>(guess != truth);
        dec.commit(phi, truth);
    }
    return mismatch;
}

} // namespace slowpolar
