#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "slowpolar/datum.hpp"
#include "slowpolar/hmm.hpp"

// Layer-0 probability engine for one branch window of n0 symbols.
//
// The context precomputes backward messages
//   b_phase(t, s') = P(Y_{phase+1..n0-1}, S_{n0-1} = s' | S_phase = t)
// with all undecided future inputs marginalized under the kernel (absent
// observations marginalize the emissions too). These depend only on the
// observation window, never on decisions, so one context is shared by every
// decoder path.
//
// The forward message
//   a_phase(s, t) = P(decided inputs, Y_{0..phase-1}, S_{phase-1} = t | S_entry = s)
// advances with each decided bit; it is the only per-path state.

namespace slowpolar {

class BranchContext {
public:
    // The process must outlive the context (and every engine built on it).
    BranchContext(const HmmProcess&& proc, ObsWindow y, index_t window_len) = delete;
    BranchContext(const HmmProcess& proc, ObsWindow y, index_t window_len) : proc_(&proc) {
        if (window_len <= 0) throw domain_error("BranchContext: empty window");
        if (y && static_cast<index_t>(y->size()) != window_len)
            throw domain_error("BranchContext: window length mismatch");
        window_len_ = window_len;
        if (y) y_.assign(y->begin(), y->end());
        present_ = y.has_value();

        const int S = proc.num_states();
        backward_.assign(static_cast<std::size_t>(window_len_) * S * S, 0.0);
        // b_{n0-1}(t, s') = [t == s'], then fold backwards.
        for (int t = 0; t < S; ++t) bwd(window_len_ - 1, t, t) = 1.0;
        for (index_t phase = window_len_ - 2; phase >= 0; --phase) {
            const std::optional<int> ynext = obs(phase + 1);
            for (int t = 0; t < S; ++t)
                for (int sp = 0; sp < S; ++sp) {
                    double acc = 0.0;
                    for (int tn = 0; tn < S; ++tn) {
                        double step = 0.0;
                        for (int x = 0; x < 2; ++x) step += proc.emission(t, x, ynext, tn);
                        acc += step * bwd(phase + 1, tn, sp);
                    }
                    bwd(phase, t, sp) = acc;
                }
        }
    }

    const HmmProcess& process() const { return *proc_; }
    index_t window_len() const { return window_len_; }
    bool observations_present() const { return present_; }

    std::optional<int> obs(index_t phase) const {
        if (phase < 0 || phase >= window_len_) throw contract_error("BranchContext: phase out of range");
        if (!present_) return std::nullopt;
        return y_[static_cast<std::size_t>(phase)];
    }

    double backward(index_t phase, int t, int sp) const {
        return backward_[static_cast<std::size_t>((phase * proc_->num_states() + t) * proc_->num_states() + sp)];
    }

private:
    double& bwd(index_t phase, int t, int sp) {
        return backward_[static_cast<std::size_t>((phase * proc_->num_states() + t) * proc_->num_states() + sp)];
    }

    const HmmProcess* proc_;
    index_t window_len_ = 0;
    std::vector<int> y_;
    bool present_ = false;
    std::vector<double> backward_;
};

struct ForwardMessage {
    int states = 0;
    std::vector<double> a; // [s][t]
    double log_scale = 0.0;

    double& at(int s, int t) { return a[static_cast<std::size_t>(s * states + t)]; }
    double at(int s, int t) const { return a[static_cast<std::size_t>(s * states + t)]; }
};

inline ForwardMessage initial_forward(int num_states) {
    ForwardMessage f;
    f.states = num_states;
    f.a.assign(static_cast<std::size_t>(num_states) * num_states, 0.0);
    for (int s = 0; s < num_states; ++s) f.at(s, s) = 1.0;
    return f;
}

// Folds the decision for `phase_prev` into the forward message.
inline ForwardMessage advance_forward(const BranchContext& ctx, const ForwardMessage& fwd,
                                      index_t phase_prev, int bit_prev) {
    const int S = ctx.process().num_states();
    const std::optional<int> yp = ctx.obs(phase_prev);
    ForwardMessage out;
    out.states = S;
    out.a.assign(static_cast<std::size_t>(S) * S, 0.0);
    double sum = 0.0;
    for (int s = 0; s < S; ++s)
        for (int t = 0; t < S; ++t) {
            double acc = 0.0;
            for (int t0 = 0; t0 < S; ++t0)
                acc += fwd.at(s, t0) * ctx.process().emission(t0, bit_prev, yp, t);
            out.at(s, t) = acc;
            sum += acc;
        }
    if (!(sum > 0.0)) throw contract_error("advance_forward: message vanished");
    const double inv = 1.0 / sum;
    for (double& v : out.a) v *= inv;
    out.log_scale = fwd.log_scale + std::log(sum);
    return out;
}

// Datum at `phase` for the current forward message:
//   d(u, s, s') = sum_{t,t'} a(s, t) K[t][u][y_phase][t'] b_phase(t', s').
inline ProbDatum base_datum(const BranchContext& ctx, const ForwardMessage& fwd, index_t phase) {
    const int S = ctx.process().num_states();
    const std::optional<int> yp = ctx.obs(phase);
    ProbDatum d(S);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) {
                double acc = 0.0;
                for (int t = 0; t < S; ++t) {
                    const double w = fwd.at(s, t);
                    if (w == 0.0) continue;
                    for (int tp = 0; tp < S; ++tp)
                        acc += w * ctx.process().emission(t, u, yp, tp) * ctx.backward(phase, tp, sp);
                }
                d.at(u, s, sp) = acc;
            }
    d.set_log_scale(fwd.log_scale);
    d.normalize();
    return d;
}

// Single-owner stateful engine over one branch window. Phases must be
// requested in increasing order; the previous decision is folded in before
// the new datum is produced.
class BranchEngine {
public:
    explicit BranchEngine(std::shared_ptr<const BranchContext> ctx)
        : ctx_(std::move(ctx)), fwd_(initial_forward(ctx_->process().num_states())) {}

    BranchEngine(const HmmProcess&& proc, ObsWindow y, index_t window_len) = delete;
    BranchEngine(const HmmProcess& proc, ObsWindow y, index_t window_len)
        : BranchEngine(std::make_shared<const BranchContext>(proc, y, window_len)) {}

    const BranchContext& context() const { return *ctx_; }
    index_t next_phase() const { return next_phase_; }
    const ForwardMessage& forward_message() const { return fwd_; }

    ProbDatum update_base_probs(index_t phase, std::optional<int> prev_decided_bit) {
        if (phase != next_phase_) throw contract_error("update_base_probs: phases out of order");
        if (phase >= ctx_->window_len()) throw contract_error("update_base_probs: past end of window");
        if (phase > 0) {
            if (!prev_decided_bit) throw contract_error("update_base_probs: missing previous decision");
            fwd_ = advance_forward(*ctx_, fwd_, phase - 1, *prev_decided_bit);
        }
        ++next_phase_;
        return base_datum(*ctx_, fwd_, phase);
    }

private:
    std::shared_ptr<const BranchContext> ctx_;
    ForwardMessage fwd_;
    index_t next_phase_ = 0;
};

} // namespace slowpolar
