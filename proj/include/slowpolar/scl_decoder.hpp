#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "slowpolar/branch_engine.hpp"
#include "slowpolar/cea.hpp"
#include "slowpolar/datum.hpp"
#include "slowpolar/geometry.hpp"
#include "slowpolar/hmm.hpp"
#include "slowpolar/shaping.hpp"
#include "slowpolar/transform.hpp"

// Successive-cancellation list decoder over branch-only-indexed storage.
//
// Every per-layer array holds one entry per branch: the latest (phase,
// value) pair. Entries are grouped in branc cells (one cell per pair of
// consecutive branches) and the cells live in cyclic exponential arrays,
// written in bit-reversed cyclic branc order. Path state is therefore a
// handful of CEA handles per layer; cloning a path copies handles only, and
// an advancing write privatizes just the single internal array it touches.
//
// Datum cells hold shared handles to immutable datums (the zeroing rule
// produces a new datum value rather than mutating), plus, at layer 0, the
// branch's forward message, which advances with decisions and is therefore
// path state as well. Backward messages depend only on the observations and
// are shared by every path.

namespace slowpolar {

struct BranchSlot {
    index_t phase = -1;
    std::uint8_t bit = 0;
};

struct DatumSlot {
    index_t phase = -1; // layer branch length once complete and zeroed
    std::shared_ptr<const ProbDatum> datum;
    std::shared_ptr<const ForwardMessage> fwd; // layer 0 only
};

template <typename T>
struct BrancCell {
    T even{};
    T odd{};

    T& of(index_t branch) { return (branch & 1) ? odd : even; }
    const T& of(index_t branch) const { return (branch & 1) ? odd : even; }
};

using BitCell = BrancCell<BranchSlot>;
using DatumCell = BrancCell<DatumSlot>;

enum class SelectionMode { best_metric, crc_select };

struct ListConfig {
    int list_size = 1;
    SelectionMode selection = SelectionMode::best_metric;
};

struct SclPathResult {
    Bits u_hat;
    Bits x_hat;
    double log_metric = 0.0;
    bool crc_ok = true;
    int path_id = 0;
};

// Test instrumentation: store-write events in execution order.
struct SclInstrumentation {
    struct StoreWrite {
        int layer;
        std::size_t position; // CEA position
        index_t phase;
        index_t branch;
        bool is_bit_store;
        int bit; // bit stores only
    };
    std::vector<StoreWrite> writes;
};

struct SclPhasePathInfo {
    int path_id;
    double metric;
    int bit;
};

class SclDecoder {
public:
    // One list-decoding hypothesis. Copying shares every store block until a
    // write needs it.
    struct Path {
        double metric = 0.0;
        std::vector<Cea<BitCell>> bit_store;     // layers 0..n-1
        std::vector<Cea<DatumCell>> datum_store; // layers 0..n-1
        index_t top_bit_phase = -1;
        std::uint8_t top_bit = 0;
        index_t top_datum_phase = -1;
        std::shared_ptr<const ProbDatum> top_datum;
        std::shared_ptr<const ForwardMessage> base_fwd; // depth-0 transforms only

        struct BitNode {
            std::uint8_t bit;
            std::shared_ptr<const BitNode> prev;
        };
        std::shared_ptr<const BitNode> decided;
        ShapingEval shaping;
    };

    SclDecoder(const SlowParams& params, const HmmProcess& proc, Observations y,
               const ShapingRule& shaping, ListConfig config, std::uint64_t seed)
        : params_(params), proc_(&proc), shaping_(&shaping), config_(config), seed_(seed) {
        if (config_.list_size < 1) throw domain_error("SclDecoder: list size must be >= 1");
        if (shaping.size() != params.total_len()) throw domain_error("SclDecoder: shaping size mismatch");
        if (y && static_cast<index_t>(y->size()) != params.total_len())
            throw domain_error("SclDecoder: observation length mismatch");

        for (int layer = 0; layer <= params_.n; ++layer) sizes_.push_back(layer_sizes(params_, layer));
        tracker_.assign(static_cast<std::size_t>(std::max(params_.n, 0)), {});

        const index_t n0 = params_.base_len();
        const index_t branches = params_.branches(0);
        contexts_.reserve(static_cast<std::size_t>(branches));
        for (index_t beta = 0; beta < branches; ++beta) {
            ObsWindow w = std::nullopt;
            if (y) w = std::span<const int>(*y).subspan(static_cast<std::size_t>(beta * n0),
                                                        static_cast<std::size_t>(n0));
            contexts_.push_back(std::make_shared<const BranchContext>(proc, w, n0));
        }
        identity_fwd_ = std::make_shared<const ForwardMessage>(initial_forward(proc.num_states()));

        paths_.push_back(make_initial_path());
    }

    // Hooks; both optional.
    SclInstrumentation* instrumentation = nullptr;
    std::function<void(index_t phase, bool data_phase, const std::vector<SclPhasePathInfo>&)> on_phase;

    index_t current_phase() const { return phase_; }
    bool finished() const { return phase_ == params_.total_len(); }
    const std::vector<Path>& paths() const { return paths_; }

    // O(log^2 N) handle copies; writes through either copy privatize only
    // the single internal array they touch.
    Path clone_path(const Path& p) const { return p; }

    // Runs one main-loop phase across all live paths.
    void step() {
        if (finished()) throw contract_error("SclDecoder: already finished");
        const index_t phi = phase_;
        if (phi > 0)
            for (Path& p : paths_) calc_datum(p, params_.n, phi, 0);

        std::vector<std::array<double, 2>> weights;
        weights.reserve(paths_.size());
        for (Path& p : paths_) weights.push_back(decision_weights(*p.top_datum, proc_->pi()));

        std::vector<int> bits;
        const bool data_phase = shaping_->kind(phi) == PhaseKind::data;
        if (!data_phase) {
            bits.resize(paths_.size());
            for (std::size_t i = 0; i < paths_.size(); ++i) {
                const int bit = paths_[i].shaping.frozen_bit(phi, paths_[i].top_datum.get(), proc_->pi());
                paths_[i].metric += metric_increment(weights[i], bit);
                bits[i] = bit;
            }
        } else {
            // Fork every path on both values, then keep the list_size best
            // candidates. Candidates are ordered parent-major / bit-minor, and
            // metric ties keep the smaller candidate index.
            struct Cand {
                std::size_t parent;
                int bit;
                double metric;
            };
            std::vector<Cand> cands;
            cands.reserve(paths_.size() * 2);
            for (std::size_t i = 0; i < paths_.size(); ++i)
                for (int u = 0; u < 2; ++u)
                    cands.push_back({i, u, paths_[i].metric + metric_increment(weights[i], u)});
            std::stable_sort(cands.begin(), cands.end(),
                             [](const Cand& a, const Cand& b) { return a.metric > b.metric; });
            if (cands.size() > static_cast<std::size_t>(config_.list_size))
                cands.resize(static_cast<std::size_t>(config_.list_size));

            std::vector<std::size_t> uses(paths_.size(), 0);
            for (const Cand& c : cands) ++uses[c.parent];
            std::vector<Path> next;
            next.reserve(cands.size());
            bits.resize(cands.size());
            for (std::size_t k = 0; k < cands.size(); ++k) {
                const Cand& c = cands[k];
                if (--uses[c.parent] == 0)
                    next.push_back(std::move(paths_[c.parent]));
                else
                    next.push_back(paths_[c.parent]); // copy: handle-level clone
                next.back().metric = c.metric;
                bits[k] = c.bit;
            }
            paths_ = std::move(next);
        }

        reset_tracker();
        for (std::size_t i = 0; i < paths_.size(); ++i) {
            commit_top(paths_[i], phi, bits[i]);
            paths_[i].shaping.feed(phi, bits[i]);
        }
        ++phase_;

        if (on_phase) {
            std::vector<SclPhasePathInfo> info;
            info.reserve(paths_.size());
            for (std::size_t i = 0; i < paths_.size(); ++i)
                info.push_back({static_cast<int>(i), paths_[i].metric, bits[i]});
            on_phase(phi, data_phase, info);
        }
    }

    std::vector<SclPathResult> results() const {
        if (!finished()) throw contract_error("SclDecoder: run not finished");
        std::vector<SclPathResult> out;
        out.reserve(paths_.size());
        for (std::size_t i = 0; i < paths_.size(); ++i) {
            SclPathResult r;
            r.path_id = static_cast<int>(i);
            r.log_metric = paths_[i].metric;
            r.u_hat = materialize(paths_[i]);
            r.x_hat = inverse(params_, r.u_hat);
            r.crc_ok = (config_.selection == SelectionMode::crc_select && shaping_->datum_free())
                           ? shaping_consistent(*shaping_, r.u_hat, seed_)
                           : true;
            out.push_back(std::move(r));
        }
        std::stable_sort(out.begin(), out.end(), [&](const SclPathResult& a, const SclPathResult& b) {
            if (config_.selection == SelectionMode::crc_select && a.crc_ok != b.crc_ok)
                return a.crc_ok;
            return a.log_metric > b.log_metric;
        });
        return out;
    }

    static std::vector<SclPathResult> run(const SlowParams& params, const HmmProcess& proc,
                                          const Observations& y, const ShapingRule& shaping,
                                          ListConfig config, std::uint64_t seed,
                                          SclInstrumentation* instr = nullptr) {
        SclDecoder dec(params, proc, y, shaping, config, seed);
        dec.instrumentation = instr;
        while (!dec.finished()) dec.step();
        return dec.results();
    }

    // Branch-only store access. Reads return the latest (phase, value) pair
    // for the branch; writes require per-branch phases to advance by one.
    BranchSlot store_read_bit(const Path& p, int layer, index_t branch) const {
        check_store_layer(layer);
        const auto [pos, _] = locate(layer, branch);
        if (!p.bit_store[static_cast<std::size_t>(layer)].readable(pos)) return BranchSlot{};
        return p.bit_store[static_cast<std::size_t>(layer)].read(pos).of(branch);
    }

    DatumSlot store_read_datum(const Path& p, int layer, index_t branch) const {
        check_store_layer(layer);
        const auto [pos, _] = locate(layer, branch);
        if (!p.datum_store[static_cast<std::size_t>(layer)].readable(pos)) return DatumSlot{};
        return p.datum_store[static_cast<std::size_t>(layer)].read(pos).of(branch);
    }

    BranchSlot store_write_bit(Path& p, int layer, index_t phase, index_t branch, int bit) {
        check_store_layer(layer);
        const auto [pos, brancs] = locate(layer, branch);
        auto& cea = p.bit_store[static_cast<std::size_t>(layer)];
        BitCell cell = cea.readable(pos) ? cea.read(pos) : BitCell{};
        BranchSlot prior = cell.of(branch);
        if (phase != prior.phase + 1)
            throw contract_error("SclDecoder: bit store phases must advance by one");
        cell.of(branch) = {phase, static_cast<std::uint8_t>(bit)};
        cea.write(pos, std::move(cell));
        if (instrumentation)
            instrumentation->writes.push_back({layer, pos, phase, branch, true, bit});
        return prior;
    }

private:
    void check_store_layer(int layer) const {
        if (layer < 0 || layer >= params_.n) throw domain_error("SclDecoder: no store for this layer");
    }

    // (CEA position, branc count) for the branc holding `branch`.
    std::pair<std::size_t, index_t> locate(int layer, index_t branch) const {
        const index_t brancs = params_.branches(layer) / 2;
        const index_t pos = branc_position(branc_of(branch), brancs);
        return {static_cast<std::size_t>(pos), brancs};
    }

    void reset_tracker() {
        for (auto& t : tracker_) t = {};
    }

    Path make_initial_path() {
        Path p;
        p.shaping = ShapingEval(*shaping_, seed_);
        if (params_.n == 0) {
            p.base_fwd = identity_fwd_;
            p.top_datum = std::make_shared<const ProbDatum>(base_datum(*contexts_[0], *identity_fwd_, 0));
            p.top_datum_phase = 0;
            return p;
        }
        for (int layer = 0; layer < params_.n; ++layer) {
            const int t = params_.n - 1 - layer;
            p.bit_store.emplace_back(t);
            p.datum_store.emplace_back(t);
        }

        // Initialization sweep: every branch's phase-0 datum, layer by layer
        // in cyclic position order so the stores see one clean first cycle.
        {
            auto& cea = p.datum_store[0];
            const index_t brancs = params_.branches(0) / 2;
            for (index_t pos = 0; pos < brancs; ++pos) {
                const index_t g = static_cast<index_t>(
                    bit_reverse(static_cast<std::uint64_t>(pos),
                                floor_log2(static_cast<std::uint64_t>(brancs))));
                DatumCell cell;
                cell.even = {0,
                             std::make_shared<const ProbDatum>(
                                 base_datum(*contexts_[static_cast<std::size_t>(2 * g)], *identity_fwd_, 0)),
                             identity_fwd_};
                cell.odd = {0,
                            std::make_shared<const ProbDatum>(
                                base_datum(*contexts_[static_cast<std::size_t>(2 * g + 1)], *identity_fwd_, 0)),
                            identity_fwd_};
                note_datum_write(0, static_cast<std::size_t>(pos), 0, 2 * g);
                cea.write(static_cast<std::size_t>(pos), std::move(cell));
            }
        }
        for (int layer = 1; layer < params_.n; ++layer) {
            auto& cea = p.datum_store[static_cast<std::size_t>(layer)];
            const index_t brancs = params_.branches(layer) / 2;
            for (index_t pos = 0; pos < brancs; ++pos) {
                const index_t g = (brancs == 1)
                                      ? 0
                                      : static_cast<index_t>(bit_reverse(
                                            static_cast<std::uint64_t>(pos),
                                            floor_log2(static_cast<std::uint64_t>(brancs))));
                DatumCell cell;
                cell.even = {0, std::make_shared<const ProbDatum>(initial_combined(p, layer, 2 * g)), nullptr};
                cell.odd = {0, std::make_shared<const ProbDatum>(initial_combined(p, layer, 2 * g + 1)), nullptr};
                note_datum_write(layer, static_cast<std::size_t>(pos), 0, 2 * g);
                cea.write(static_cast<std::size_t>(pos), std::move(cell));
            }
        }
        p.top_datum = std::make_shared<const ProbDatum>(initial_combined(p, params_.n, 0));
        p.top_datum_phase = 0;
        return p;
    }

    // Phase-0 datum of `branch` at `layer`, combined from its children's
    // phase-0 datums (lateral, even child hosting).
    ProbDatum initial_combined(const Path& p, int layer, index_t branch) {
        const auto [pos, _] = locate(layer - 1, 2 * branch);
        const DatumCell& cell = p.datum_store[static_cast<std::size_t>(layer - 1)].read(pos);
        return combine_lateral(*cell.even.datum, *cell.odd.datum, true);
    }

    void note_datum_write(int layer, std::size_t pos, index_t phase, index_t branch) {
        if (instrumentation) instrumentation->writes.push_back({layer, pos, phase, branch, false, 0});
    }

    // Recursive datum pass (tracker-driven). Phases repeat-requested within
    // one iteration are skipped by the stored-phase guard; a datum for a
    // given (layer, branch, phase) never changes once the prefix is decided.
    void calc_datum(Path& p, int layer, index_t phase, index_t branch) {
        const LayerSizes& ls = sizes_[static_cast<std::size_t>(layer)];

        if (layer == params_.n) {
            if (p.top_datum_phase == phase) return;
            if (p.top_datum_phase != phase - 1)
                throw contract_error("SclDecoder: top datum out of phase");
            if (params_.n == 0) {
                if (p.top_bit_phase != phase - 1) throw contract_error("SclDecoder: top bit missing");
                auto fwd = std::make_shared<const ForwardMessage>(
                    advance_forward(*contexts_[0], *p.base_fwd, phase - 1, p.top_bit));
                p.base_fwd = fwd;
                p.top_datum = std::make_shared<const ProbDatum>(base_datum(*contexts_[0], *fwd, phase));
                p.top_datum_phase = phase;
                return;
            }
            run_tracker_advances(p, layer);
            p.top_datum = std::make_shared<const ProbDatum>(combined_datum(p, layer, phase, 0));
            p.top_datum_phase = phase;
            return;
        }

        if (phase == ls.branch_len) {
            zero_final_datum(p, layer, branch);
            return;
        }

        if (layer == 0) {
            advance_base(p, phase, branch);
            return;
        }

        if (phase == 0) throw contract_error("SclDecoder: interior phase-0 request after init");
        run_tracker_advances(p, layer);

        const auto [pos, _] = locate(layer, branch);
        auto& cea = p.datum_store[static_cast<std::size_t>(layer)];
        DatumCell cell = cea.read(pos);
        DatumSlot& slot = cell.of(branch);
        if (slot.phase == phase) return;
        if (slot.phase != phase - 1) throw contract_error("SclDecoder: datum store out of phase");
        slot.datum = std::make_shared<const ProbDatum>(combined_datum(p, layer, phase, branch));
        slot.phase = phase;
        note_datum_write(layer, pos, phase, branch);
        cea.write(pos, std::move(cell));
    }

    void run_tracker_advances(Path& p, int layer) {
        for (const auto& entry : tracker_[static_cast<std::size_t>(layer - 1)]) {
            if (!entry) continue;
            calc_datum(p, layer - 1, entry->first + 1, entry->second);
        }
    }

    void advance_base(Path& p, index_t phase, index_t branch) {
        const auto [pos, _] = locate(0, branch);
        auto& cea = p.datum_store[0];
        DatumCell cell = cea.read(pos);
        DatumSlot& slot = cell.of(branch);
        if (slot.phase == phase) return;
        if (slot.phase != phase - 1) throw contract_error("SclDecoder: base store out of phase");
        const BranchSlot prev = store_read_bit(p, 0, branch);
        if (prev.phase != phase - 1) throw contract_error("SclDecoder: base decision missing");
        auto fwd = std::make_shared<const ForwardMessage>(advance_forward(
            *contexts_[static_cast<std::size_t>(branch)], *slot.fwd, phase - 1, prev.bit));
        slot.datum = std::make_shared<const ProbDatum>(
            base_datum(*contexts_[static_cast<std::size_t>(branch)], *fwd, phase));
        slot.fwd = std::move(fwd);
        slot.phase = phase;
        note_datum_write(0, pos, phase, branch);
        cea.write(pos, std::move(cell));
    }

    void zero_final_datum(Path& p, int layer, index_t branch) {
        const LayerSizes& ls = sizes_[static_cast<std::size_t>(layer)];
        const auto [pos, _] = locate(layer, branch);
        auto& cea = p.datum_store[static_cast<std::size_t>(layer)];
        DatumCell cell = cea.read(pos);
        DatumSlot& slot = cell.of(branch);
        if (slot.phase == ls.branch_len) return; // already zeroed
        if (slot.phase != ls.branch_len - 1)
            throw contract_error("SclDecoder: zeroing before the final datum");
        const BranchSlot bslot = store_read_bit(p, layer, branch);
        if (bslot.phase != ls.branch_len - 1)
            throw contract_error("SclDecoder: zeroing before the final decision");
        slot.datum = std::make_shared<const ProbDatum>(retain_decided(*slot.datum, bslot.bit));
        slot.phase = ls.branch_len;
        note_datum_write(layer, pos, ls.branch_len, branch);
        cea.write(pos, std::move(cell));
    }

    // Combines the children's slots into the datum for (layer, phase,
    // branch). The two children of a branch form exactly one branc of the
    // layer below, i.e. one store cell.
    ProbDatum combined_datum(Path& p, int layer, index_t phase, index_t branch) {
        const LayerSizes& cs = sizes_[static_cast<std::size_t>(layer - 1)];
        const auto [cpos, _] = locate(layer - 1, 2 * branch);
        const DatumCell& cell = p.datum_store[static_cast<std::size_t>(layer - 1)].read(cpos);
        switch (classify_phase(params_, layer, phase)) {
            case PhaseClass::lateral_top:
            case PhaseClass::lateral_bottom: {
                const index_t psi = phase / 2;
                const bool host_even = (phase % 2 == 0);
                const DatumSlot& host = host_even ? cell.even : cell.odd;
                const DatumSlot& other = host_even ? cell.odd : cell.even;
                if (host.phase != psi) throw contract_error("SclDecoder: hosting child out of phase");
                const index_t other_decided = std::min(other.phase, cs.branch_len);
                if (other_decided != phase - psi)
                    throw contract_error("SclDecoder: lateral phase alignment broken");
                return combine_lateral(*host.datum, *other.datum, host_even);
            }
            case PhaseClass::medial_minus: {
                const index_t psi_p = (phase - 1) / 2;
                if (cell.even.phase != psi_p + 1 || cell.odd.phase != psi_p)
                    throw contract_error("SclDecoder: medial children out of phase");
                return combine_medial_minus(*cell.even.datum, *cell.odd.datum);
            }
            case PhaseClass::medial_plus:
            default: {
                const index_t psi_p = (phase - 1) / 2;
                if (cell.even.phase != psi_p + 1 || cell.odd.phase != psi_p)
                    throw contract_error("SclDecoder: medial children out of phase");
                int delta;
                if (layer == params_.n) {
                    if (p.top_bit_phase != phase - 1)
                        throw contract_error("SclDecoder: top minus bit missing");
                    delta = p.top_bit;
                } else {
                    const BranchSlot prev = store_read_bit(p, layer, branch);
                    if (prev.phase != phase - 1)
                        throw contract_error("SclDecoder: minus bit missing");
                    delta = prev.bit;
                }
                const bool minus_side =
                    classify_phase(params_, layer - 1, psi_p) == PhaseClass::medial_minus;
                return combine_medial_plus(*cell.even.datum, *cell.odd.datum, delta, minus_side);
            }
        }
    }

    // Records the decision at the top layer and resolves the transform
    // equations downwards, threading each branch's overwritten previous bit
    // into the medial-plus resolution.
    void commit_top(Path& p, index_t phase, int bit) {
        if (phase != p.top_bit_phase + 1) throw contract_error("SclDecoder: top commit out of order");
        const int prev_top = p.top_bit;
        p.top_bit_phase = phase;
        p.top_bit = static_cast<std::uint8_t>(bit);
        p.decided = std::make_shared<const Path::BitNode>(
            Path::BitNode{static_cast<std::uint8_t>(bit), p.decided});

        if (params_.n == 0) return;
        const PhaseClass cls = classify_phase(params_, params_.n, phase);
        if (cls == PhaseClass::medial_minus) return;
        if (is_lateral(cls)) {
            const index_t psi = phase / 2;
            const index_t child = phase % 2;
            tracker_[static_cast<std::size_t>(params_.n - 1)][0] = {{psi, child}};
            propagate(p, params_.n - 1, psi, child, bit);
            return;
        }
        const index_t psi_p = (phase - 1) / 2;
        resolve_pair(p, params_.n - 1, psi_p, 0, bit, prev_top);
    }

    // Writes the two child bits of a decided minus/plus pair at layer
    // `child_layer` under parent branch `parent_branch`, updates the
    // tracker, and recurses.
    void resolve_pair(Path& p, int child_layer, index_t psi_p, index_t parent_branch, int plus_bit,
                      int minus_bit) {
        const index_t even_child = 2 * parent_branch;
        const index_t odd_child = 2 * parent_branch + 1;
        int v_even, v_odd;
        if (classify_phase(params_, child_layer, psi_p) == PhaseClass::medial_minus) {
            v_even = plus_bit ^ minus_bit;
            v_odd = plus_bit;
        } else {
            v_odd = plus_bit ^ minus_bit;
            v_even = plus_bit;
        }
        tracker_[static_cast<std::size_t>(child_layer)][0] = {{psi_p, odd_child}};
        tracker_[static_cast<std::size_t>(child_layer)][1] = {{psi_p + 1, even_child}};
        propagate(p, child_layer, psi_p, odd_child, v_odd);
        propagate(p, child_layer, psi_p + 1, even_child, v_even);
    }

    void propagate(Path& p, int layer, index_t phase, index_t branch, int bit) {
        const BranchSlot prior = store_write_bit(p, layer, phase, branch, bit);
        const PhaseClass cls = classify_phase(params_, layer, phase);
        if (layer == 0 || cls == PhaseClass::medial_minus) return;
        if (is_lateral(cls)) {
            const index_t psi = phase / 2;
            const index_t child = 2 * branch + (phase % 2);
            tracker_[static_cast<std::size_t>(layer - 1)][0] = {{psi, child}};
            propagate(p, layer - 1, psi, child, bit);
            return;
        }
        // Medial plus: the bit just overwritten is the pair's minus bit.
        if (prior.phase != phase - 1) throw contract_error("SclDecoder: lost minus bit");
        resolve_pair(p, layer - 1, (phase - 1) / 2, branch, bit, prior.bit);
    }

    Bits materialize(const Path& p) const {
        Bits out(static_cast<std::size_t>(params_.total_len()));
        const Path::BitNode* node = p.decided.get();
        for (std::size_t i = out.size(); i-- > 0;) {
            if (node == nullptr) throw contract_error("SclDecoder: incomplete decision chain");
            out[i] = node->bit;
            node = node->prev.get();
        }
        return out;
    }

    SlowParams params_;
    const HmmProcess* proc_;
    const ShapingRule* shaping_;
    ListConfig config_;
    std::uint64_t seed_;
    std::vector<LayerSizes> sizes_;
    std::vector<std::shared_ptr<const BranchContext>> contexts_;
    std::shared_ptr<const ForwardMessage> identity_fwd_;
    std::vector<std::array<std::optional<std::pair<index_t, index_t>>, 2>> tracker_;
    std::vector<Path> paths_;
    index_t phase_ = 0;
};

} // namespace slowpolar
