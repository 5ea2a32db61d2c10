#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "slowpolar/errors.hpp"
#include "slowpolar/util.hpp"

// Cyclic exponential array: a container of 2^size_log objects written in
// cyclically advancing index order and read at random. Internally the
// current cycle's values below the write cursor live in tiers of sizes
// 1, 2, 4, ..., 2^(size_log-1); values not yet reached this cycle live in a
// full-size previous-cycle array; the cursor's own value sits in a scalar.
//
// Writing the next index relocates the 2^tau most recent values (tau = the
// lowest set bit of the new index) into one tier, or everything into the
// previous-cycle array on wraparound. Every advancing write therefore
// mutates exactly one internal array, which is what makes handle-level
// cloning cheap: clones share the arrays, and a write privatizes only its
// single target array.

namespace slowpolar {

// Which internal array an advancing write from `before_last` to
// `write_index` mutates: kPreviousArray on wraparound, otherwise the tier
// with the largest tau such that bit tau is set in the new index and clear
// in the old one.
inline constexpr int kPreviousArray = -1;

inline int changed_array(std::uint64_t before_last, std::uint64_t write_index, int size_log) {
    const std::uint64_t cap = std::uint64_t{1} << size_log;
    if (write_index != (before_last + 1) % cap)
        throw domain_error("changed_array: not an advancing write");
    if (write_index == 0) return kPreviousArray;
    return floor_log2(write_index & ~before_last);
}

template <typename Obj>
class Cea {
public:
    explicit Cea(int size_log) : size_log_(size_log) {
        if (size_log < 0 || size_log > 62) throw domain_error("Cea: size_log out of range");
        cap_ = std::size_t{1} << size_log;
        tiers_.reserve(static_cast<std::size_t>(size_log));
        for (int tau = 0; tau < size_log; ++tau)
            tiers_.push_back(std::make_shared<Block>(std::size_t{1} << tau));
        previous_ = std::make_shared<Block>(cap_);
        tier_versions_.assign(static_cast<std::size_t>(size_log), 0);
    }

    int size_log() const { return size_log_; }
    std::size_t capacity() const { return cap_; }
    bool empty() const { return empty_; }

    std::size_t last_index() const {
        if (empty_) throw contract_error("Cea: no writes yet");
        return last_;
    }

    // True when position j holds a value from the current or previous cycle.
    bool readable(std::size_t j) const {
        if (empty_ || j >= cap_) return false;
        if (j <= last_) return true;
        return wrapped_;
    }

    const Obj& read(std::size_t j) const {
        if (empty_) throw contract_error("Cea: read before first write");
        if (j >= cap_) throw contract_error("Cea: read out of range");
        if (j == last_) return last_value_;
        if (j > last_) {
            if (!wrapped_) throw contract_error("Cea: position not yet written");
            return previous_->slots[j];
        }
        const int tau = floor_log2(last_ ^ j); // highest bit set in last_, clear in j
        return tiers_[static_cast<std::size_t>(tau)]->slots[j & ((std::size_t{1} << tau) - 1)];
    }

    // Paper-style write: the index must be the cursor (overwrite) or its
    // cyclic successor (advance). A first write must target index 0. Note a
    // capacity-1 array resolves every write as an overwrite; cycle
    // boundaries there are driven explicitly via advance().
    void write(std::size_t i, Obj v) {
        if (empty_) {
            if (i != 0) throw contract_error("Cea: first write must be at index 0");
            first_write(std::move(v));
            return;
        }
        if (i == last_) {
            last_value_ = std::move(v);
            return;
        }
        if (i == (last_ + 1 & (cap_ - 1))) {
            advance(std::move(v));
            return;
        }
        throw contract_error("Cea: write index must be the cursor or its successor");
    }

    // Advancing write at the cursor's cyclic successor.
    void advance(Obj v) {
        if (empty_) {
            first_write(std::move(v));
            return;
        }
        const std::size_t next = (last_ + 1) & (cap_ - 1);
        if (next == 0) {
            // Wraparound: the whole finished cycle becomes the previous cycle.
            Block& prev = privatize(previous_);
            for (std::size_t j = 0; j < cap_; ++j) {
                prev.slots[j] = read(j);
                ++copies_;
            }
            ++previous_version_;
            wrapped_ = true;
        } else {
            const int tau = static_cast<int>(std::countr_zero(next));
            const std::size_t span = std::size_t{1} << tau;
            Block& tier = privatize(tiers_[static_cast<std::size_t>(tau)]);
            for (std::size_t idx = next - span; idx < next; ++idx) {
                tier.slots[idx & (span - 1)] = read(idx);
                ++copies_;
            }
            ++tier_versions_[static_cast<std::size_t>(tau)];
        }
        last_ = next;
        last_value_ = std::move(v);
    }

    // Instrumentation.
    std::uint64_t object_copies() const { return copies_; }
    std::uint64_t tier_version(int tau) const { return tier_versions_[static_cast<std::size_t>(tau)]; }
    std::uint64_t previous_version() const { return previous_version_; }

    // Shared-storage introspection for sharing audits.
    long shares_of_tier(int tau) const { return tiers_[static_cast<std::size_t>(tau)].use_count(); }
    long shares_of_previous() const { return previous_.use_count(); }

private:
    struct Block {
        explicit Block(std::size_t n) : slots(n) {}
        std::vector<Obj> slots;
    };

    void first_write(Obj v) {
        last_ = 0;
        last_value_ = std::move(v);
        empty_ = false;
    }

    // Clones the block when shared with another handle. Relocation always
    // overwrites every slot of its target, so the fresh block need not copy
    // the stale contents.
    Block& privatize(std::shared_ptr<Block>& block) {
        if (block.use_count() != 1) block = std::make_shared<Block>(block->slots.size());
        return *block;
    }

    int size_log_;
    std::size_t cap_ = 1;
    bool empty_ = true;
    bool wrapped_ = false;
    std::size_t last_ = 0;
    Obj last_value_{};
    std::vector<std::shared_ptr<Block>> tiers_;
    std::shared_ptr<Block> previous_;
    std::vector<std::uint64_t> tier_versions_;
    std::uint64_t previous_version_ = 0;
    std::uint64_t copies_ = 0;
};

} // namespace slowpolar
