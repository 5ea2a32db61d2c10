#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "slowpolar/errors.hpp"

// The probability datum: for one (layer, phase, branch) a table over
// (input bit u, entry state s, exit state s') proportional to
//
//   P(V_phase = u, V prefix = decided values, Y block, S_exit = s' | S_entry = s).
//
// Storing the entry state as a conditioning (rather than as part of a joint)
// makes datums chain multiplicatively across a shared boundary state:
// combining child A over [start, mid] with child B over (mid, end] is a sum
// over the middle state of a product of tables. Tables are normalized to sum
// to 1 after every operation and the log of the accumulated scale is carried
// separately, so entries never underflow and all decision ratios are exact.

namespace slowpolar {

struct DatumCounters {
    static std::atomic<long long>& live() {
        static std::atomic<long long> v{0};
        return v;
    }
    static std::atomic<long long>& peak() {
        static std::atomic<long long> v{0};
        return v;
    }
    static void note_create() {
        const long long now = ++live();
        long long prev = peak().load(std::memory_order_relaxed);
        while (now > prev && !peak().compare_exchange_weak(prev, now)) {}
    }
    static void note_destroy() { --live(); }
    static void reset_peak() { peak().store(live().load()); }
};

class ProbDatum {
public:
    ProbDatum() { DatumCounters::note_create(); }

    explicit ProbDatum(int num_states)
        : states_(num_states), t_(static_cast<std::size_t>(2 * num_states * num_states), 0.0) {
        if (num_states <= 0) throw domain_error("ProbDatum: need at least one state");
        DatumCounters::note_create();
    }

    ProbDatum(const ProbDatum& o) : states_(o.states_), t_(o.t_), log_scale_(o.log_scale_) {
        DatumCounters::note_create();
    }
    ProbDatum(ProbDatum&& o) noexcept
        : states_(o.states_), t_(std::move(o.t_)), log_scale_(o.log_scale_) {
        DatumCounters::note_create();
    }
    ProbDatum& operator=(const ProbDatum&) = default;
    ProbDatum& operator=(ProbDatum&&) noexcept = default;
    ~ProbDatum() { DatumCounters::note_destroy(); }

    int num_states() const { return states_; }
    bool empty() const { return t_.empty(); }
    double log_scale() const { return log_scale_; }

    double& at(int u, int s, int sp) { return t_[idx(u, s, sp)]; }
    double at(int u, int s, int sp) const { return t_[idx(u, s, sp)]; }
    std::span<const double> table() const { return t_; }

    // Scales entries to sum to 1; the log of the factor accumulates.
    void normalize() {
        double sum = 0.0;
        for (double v : t_) sum += v;
        if (!(sum > 0.0)) throw contract_error("ProbDatum: all-zero table");
        const double inv = 1.0 / sum;
        for (double& v : t_) v *= inv;
        log_scale_ += std::log(sum);
    }

    void set_log_scale(double v) { log_scale_ = v; }

private:
    std::size_t idx(int u, int s, int sp) const {
        return static_cast<std::size_t>((u * states_ + s) * states_ + sp);
    }

    int states_ = 0;
    std::vector<double> t_;
    double log_scale_ = 0.0;
};

// Sum over u' of a datum, viewed as a matrix over (entry, exit) states. Once
// the final bit of a branch is decided and the datum zeroed accordingly,
// this marginal is the conditioning on the decided value.
inline void datum_bit_marginal(const ProbDatum& d, std::vector<double>& out) {
    const int S = d.num_states();
    out.assign(static_cast<std::size_t>(S * S), 0.0);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp)
                out[static_cast<std::size_t>(s * S + sp)] += d.at(u, s, sp);
}

// Lateral combine: the parent phase copies the hosting child's current
// symbol; the other child contributes its decided prefix via the bit
// marginal. Chaining runs host-then-other when the host is the even child
// (first half of the block) and other-then-host when it is the odd child.
inline ProbDatum combine_lateral(const ProbDatum& host, const ProbDatum& other, bool host_is_even) {
    const int S = host.num_states();
    if (other.num_states() != S) throw contract_error("combine_lateral: state count mismatch");
    std::vector<double> marg;
    datum_bit_marginal(other, marg);
    ProbDatum out(S);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) {
                double acc = 0.0;
                for (int m = 0; m < S; ++m) {
                    acc += host_is_even
                               ? host.at(u, s, m) * marg[static_cast<std::size_t>(m * S + sp)]
                               : marg[static_cast<std::size_t>(s * S + m)] * host.at(u, m, sp);
                }
                out.at(u, s, sp) = acc;
            }
    out.set_log_scale(host.log_scale() + other.log_scale());
    out.normalize();
    return out;
}

// Medial minus combine: the parent bit is the xor of child A's symbol at
// psi'+1 and child B's symbol at psi'.
inline ProbDatum combine_medial_minus(const ProbDatum& a, const ProbDatum& b) {
    const int S = a.num_states();
    if (b.num_states() != S) throw contract_error("combine_medial_minus: state count mismatch");
    ProbDatum out(S);
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) {
                double acc = 0.0;
                for (int m = 0; m < S; ++m)
                    for (int bb = 0; bb < 2; ++bb)
                        acc += a.at(u ^ bb, s, m) * b.at(bb, m, sp);
                out.at(u, s, sp) = acc;
            }
    out.set_log_scale(a.log_scale() + b.log_scale());
    out.normalize();
    return out;
}

// Medial plus combine, with the minus bit `delta` already decided. Which
// child hosts the parent symbol depends on the class of psi' in the child
// layer: psi' medial-minus means child B hosts it, else child A does.
inline ProbDatum combine_medial_plus(const ProbDatum& a, const ProbDatum& b, int delta,
                                     bool psi_prime_is_minus) {
    const int S = a.num_states();
    if (b.num_states() != S) throw contract_error("combine_medial_plus: state count mismatch");
    ProbDatum out(S);
    for (int u = 0; u < 2; ++u) {
        const int ua = psi_prime_is_minus ? (delta ^ u) : u;
        const int ub = psi_prime_is_minus ? u : (delta ^ u);
        for (int s = 0; s < S; ++s)
            for (int sp = 0; sp < S; ++sp) {
                double acc = 0.0;
                for (int m = 0; m < S; ++m) acc += a.at(ua, s, m) * b.at(ub, m, sp);
                out.at(u, s, sp) = acc;
            }
    }
    out.set_log_scale(a.log_scale() + b.log_scale());
    out.normalize();
    return out;
}

// Zeroing rule applied once a branch is complete: entries for u different
// from the decided final bit are dropped, turning later marginals over this
// datum into conditioning on the decision.
inline ProbDatum retain_decided(const ProbDatum& d, int bit) {
    ProbDatum out(d.num_states());
    const int S = d.num_states();
    for (int s = 0; s < S; ++s)
        for (int sp = 0; sp < S; ++sp) out.at(bit, s, sp) = d.at(bit, s, sp);
    out.set_log_scale(d.log_scale());
    out.normalize();
    return out;
}

// Decision weights at the top layer: w(u) = sum_{s,s'} pi(s) d(u,s,s').
// Ratios w(1)/w(0) are the posterior odds of the current symbol given the
// decided prefix and the observations.
inline std::array<double, 2> decision_weights(const ProbDatum& d, std::span<const double> pi) {
    const int S = d.num_states();
    if (static_cast<int>(pi.size()) != S) throw contract_error("decision_weights: pi size mismatch");
    std::array<double, 2> w{0.0, 0.0};
    for (int u = 0; u < 2; ++u)
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int sp = 0; sp < S; ++sp) acc += d.at(u, s, sp);
            w[static_cast<std::size_t>(u)] += pi[static_cast<std::size_t>(s)] * acc;
        }
    return w;
}

// Log of the conditional probability of picking `bit` under the weights.
inline double metric_increment(const std::array<double, 2>& w, int bit) {
    const double total = w[0] + w[1];
    if (!(total > 0.0)) throw contract_error("metric_increment: zero total weight");
    return std::log(w[static_cast<std::size_t>(bit)] / total);
}

} // namespace slowpolar
