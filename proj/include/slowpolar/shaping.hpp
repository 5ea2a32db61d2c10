#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slowpolar/datum.hpp"
#include "slowpolar/geometry.hpp"
#include "slowpolar/util.hpp"

// Phase roles for encoding and decoding. A data phase carries a message
// bit. Every other phase is a shaping phase whose bit is a deterministic
// function of the decided prefix and a common-randomness seed shared by
// encoder and decoder: a constant zero, a seeded random bit, a running-CRC
// bit (the dynamically-frozen style), or a seeded rounding of the current
// datum's conditional.

namespace slowpolar {

enum class PhaseKind { data, frozen };

enum class FrozenKind {
    zero,        // always 0
    random_bit,  // pseudorandom bit derived from (seed, phase)
    crc,         // successive bits of a CRC register fed by decided data bits
    conditional, // seeded rounding of the datum's conditional; needs the datum
};

struct CrcSpec {
    int width = 8;
    std::uint32_t poly = 0x07; // x^8 + x^2 + x + 1 truncated form
};

inline std::uint32_t crc_feed(std::uint32_t reg, int bit, const CrcSpec& spec) {
    const std::uint32_t mask = (spec.width >= 32) ? 0xffffffffu : ((1u << spec.width) - 1u);
    const std::uint32_t top = (reg >> (spec.width - 1)) & 1u;
    reg = ((reg << 1) | static_cast<std::uint32_t>(bit & 1)) & mask;
    if (top) reg ^= spec.poly & mask;
    return reg;
}

class ShapingRule {
public:
    struct PhaseSpec {
        PhaseKind kind = PhaseKind::data;
        FrozenKind frozen = FrozenKind::zero;
    };

    ShapingRule() = default;
    explicit ShapingRule(std::vector<PhaseSpec> specs, CrcSpec crc = {})
        : specs_(std::move(specs)), crc_(crc) {}

    static ShapingRule all_data(index_t n) {
        return ShapingRule(std::vector<PhaseSpec>(static_cast<std::size_t>(n),
                                                  {PhaseKind::data, FrozenKind::zero}));
    }

    static ShapingRule all_frozen(index_t n, FrozenKind f) {
        return ShapingRule(std::vector<PhaseSpec>(static_cast<std::size_t>(n),
                                                  {PhaseKind::frozen, f}));
    }

    // Data at the listed phases, frozen everywhere else.
    static ShapingRule from_data_set(index_t n, std::span<const index_t> data_phases,
                                     FrozenKind f = FrozenKind::zero) {
        std::vector<PhaseSpec> specs(static_cast<std::size_t>(n), {PhaseKind::frozen, f});
        for (index_t phi : data_phases) {
            if (phi < 0 || phi >= n) throw domain_error("ShapingRule: data phase out of range");
            specs[static_cast<std::size_t>(phi)] = {PhaseKind::data, f};
        }
        return ShapingRule(std::move(specs));
    }

    // Rededicates the last `spec.width` data phases to carry CRC bits.
    ShapingRule with_crc(const CrcSpec& spec) const {
        ShapingRule out = *this;
        out.crc_ = spec;
        int remaining = spec.width;
        for (std::size_t i = out.specs_.size(); i-- > 0 && remaining > 0;) {
            if (out.specs_[i].kind == PhaseKind::data) {
                out.specs_[i] = {PhaseKind::frozen, FrozenKind::crc};
                --remaining;
            }
        }
        if (remaining > 0) throw domain_error("ShapingRule: fewer data phases than CRC bits");
        return out;
    }

    index_t size() const { return static_cast<index_t>(specs_.size()); }
    PhaseKind kind(index_t phase) const { return spec(phase).kind; }
    FrozenKind frozen_kind(index_t phase) const { return spec(phase).frozen; }
    const CrcSpec& crc() const { return crc_; }

    index_t num_data_phases() const {
        index_t c = 0;
        for (const auto& s : specs_)
            if (s.kind == PhaseKind::data) ++c;
        return c;
    }

    std::vector<index_t> data_phases() const {
        std::vector<index_t> out;
        for (index_t i = 0; i < size(); ++i)
            if (kind(i) == PhaseKind::data) out.push_back(i);
        return out;
    }

    // True when every frozen bit is computable without a datum, i.e. the
    // rule can be replayed outside a decoder.
    bool datum_free() const {
        for (const auto& s : specs_)
            if (s.kind == PhaseKind::frozen && s.frozen == FrozenKind::conditional) return false;
        return true;
    }

private:
    const PhaseSpec& spec(index_t phase) const {
        if (phase < 0 || phase >= size()) throw domain_error("ShapingRule: phase out of range");
        return specs_[static_cast<std::size_t>(phase)];
    }

    std::vector<PhaseSpec> specs_;
    CrcSpec crc_;
};

// Per-path evaluator of the shaping maps. Copyable; a clone continues from
// the same running state, so forked decoder paths stay consistent.
class ShapingEval {
public:
    ShapingEval() = default;
    ShapingEval(const ShapingRule& rule, std::uint64_t seed) : rule_(&rule), seed_(seed) {}

    // F_phase(prefix): the frozen bit for this phase given the state fed so
    // far. `datum` is consulted only by the conditional kind.
    int frozen_bit(index_t phase, const ProbDatum* datum, std::span<const double> pi) {
        switch (rule_->frozen_kind(phase)) {
            case FrozenKind::zero:
                return 0;
            case FrozenKind::random_bit:
                return static_cast<int>(derive_seed(seed_, static_cast<std::uint64_t>(phase)) & 1u);
            case FrozenKind::crc: {
                const int bit = static_cast<int>(crc_reg_ & 1u);
                crc_reg_ >>= 1;
                return bit;
            }
            case FrozenKind::conditional: {
                if (datum == nullptr)
                    throw contract_error("ShapingEval: conditional rule needs the datum");
                const auto w = decision_weights(*datum, pi);
                const double p1 = w[1] / (w[0] + w[1]);
                const double u = static_cast<double>(
                                     derive_seed(seed_, static_cast<std::uint64_t>(phase)) >> 11) *
                                 0x1.0p-53;
                return u < p1 ? 1 : 0;
            }
        }
        throw contract_error("ShapingEval: unknown frozen kind");
    }

    // Records the decided bit. Data bits drive the CRC register.
    void feed(index_t phase, int bit) {
        if (rule_->kind(phase) == PhaseKind::data) crc_reg_ = crc_feed(crc_reg_, bit, rule_->crc());
    }

    std::uint32_t crc_register() const { return crc_reg_; }

private:
    const ShapingRule* rule_ = nullptr;
    std::uint64_t seed_ = 0;
    std::uint32_t crc_reg_ = 0;
};

// Replays a finished word against the rule: true when every frozen phase
// holds exactly the bit the rule dictates. Requires a datum-free rule.
inline bool shaping_consistent(const ShapingRule& rule, std::span<const std::uint8_t> u,
                               std::uint64_t seed) {
    if (!rule.datum_free()) throw domain_error("shaping_consistent: rule needs a decoder");
    if (static_cast<index_t>(u.size()) != rule.size())
        throw domain_error("shaping_consistent: word length mismatch");
    ShapingEval eval(rule, seed);
    for (index_t phi = 0; phi < rule.size(); ++phi) {
        const int bit = u[static_cast<std::size_t>(phi)];
        if (rule.kind(phi) == PhaseKind::frozen && eval.frozen_bit(phi, nullptr, {}) != bit)
            return false;
        eval.feed(phi, bit);
    }
    return true;
}

} // namespace slowpolar
