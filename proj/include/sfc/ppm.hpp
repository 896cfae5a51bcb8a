#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sfc/bitio.hpp"
#include "sfc/errors.hpp"
#include "sfc/range_coder.hpp"

namespace sfc {

// Prediction by partial matching over the binary alphabet, driving the range
// coder. Contexts are the previous <= max_order bits; escapes use method C
// (escape count = number of distinct symbols seen in the context), and the
// escape region exists only while an unseen symbol remains — a context that
// has seen both symbols cannot meet a novel one. Contexts that have seen
// nothing are skipped without emitting anything, since escape would be their
// only possibility. Exclusion over a binary alphabet degenerates nicely: an
// escape can only come from a one-symbol context and leaves a single
// candidate, so the escape itself determines the bit and each bit costs
// exactly one coding event at the longest informed context. After each bit
// every order from 0 to the current maximum is updated, and a context's
// counts are halved once one of them reaches 2^16.
//
// Encoder and decoder run the identical walk and identical updates, so their
// models never diverge on the same bit prefix.

inline constexpr int kPpmDefaultOrder = 8;
inline constexpr uint32_t kPpmCountLimit = 1u << 16;

class PpmModel {
public:
    explicit PpmModel(int max_order = kPpmDefaultOrder) : max_order_(max_order) {
        if (max_order < 0 || max_order > 24)
            throw ConfigError("ppm order must be in [0, 24]");
        tables_.resize(static_cast<size_t>(max_order) + 1);
        for (int m = 0; m <= max_order; ++m)
            tables_[static_cast<size_t>(m)].assign((size_t{2} << m), 0);
    }

    int max_order() const { return max_order_; }

    void encode_bit(RangeEncoder& enc, int bit) {
        const int top = effective_order();
        bool coded = false;
        for (int m = top; m >= 0 && !coded; --m) {
            uint32_t* c = counts(m);
            const uint32_t total = c[0] + c[1];
            if (total == 0) continue;
            const uint32_t seen = (c[0] > 0) + (c[1] > 0);
            const uint32_t esc = seen < 2 ? seen : 0;
            const uint32_t denom = total + esc;
            if (c[bit] > 0) {
                const uint32_t lo = bit ? c[0] : 0;
                enc.encode(lo, lo + c[bit], denom);
            } else {
                // one-symbol context: the escape names the excluded symbol,
                // so nothing further is coded at lower orders
                enc.encode(total, denom, denom);
            }
            coded = true;
        }
        if (!coded) enc.encode(static_cast<uint32_t>(bit), static_cast<uint32_t>(bit) + 1, 2);
        update(bit, top);
    }

    int decode_bit(RangeDecoder& dec) {
        const int top = effective_order();
        int bit = -1;
        for (int m = top; m >= 0 && bit < 0; --m) {
            uint32_t* c = counts(m);
            const uint32_t total = c[0] + c[1];
            if (total == 0) continue;
            const uint32_t seen = (c[0] > 0) + (c[1] > 0);
            const uint32_t esc = seen < 2 ? seen : 0;
            const uint32_t denom = total + esc;
            const uint32_t f = dec.decode_freq(denom);
            if (f < c[0]) {
                dec.decode(0, c[0]);
                bit = 0;
            } else if (f < total) {
                dec.decode(c[0], total);
                bit = 1;
            } else {
                dec.decode(total, denom);
                bit = c[0] > 0 ? 1 : 0;
            }
        }
        if (bit < 0) {
            const uint32_t f = dec.decode_freq(2);
            dec.decode(f, f + 1);
            bit = static_cast<int>(f);
        }
        update(bit, top);
        return bit;
    }

    bool operator==(const PpmModel& other) const {
        return max_order_ == other.max_order_ && history_ == other.history_ &&
               processed_ == other.processed_ && tables_ == other.tables_;
    }

private:
    int effective_order() const {
        return processed_ < static_cast<uint64_t>(max_order_) ? static_cast<int>(processed_)
                                                              : max_order_;
    }

    uint32_t* counts(int order) {
        const uint64_t ctx = history_ & ((uint64_t{1} << order) - 1);
        return tables_[static_cast<size_t>(order)].data() + 2 * ctx;
    }

    void update(int bit, int top) {
        for (int m = 0; m <= top; ++m) {
            uint32_t* c = counts(m);
            if (++c[bit] >= kPpmCountLimit) {
                c[0] = (c[0] + 1) >> 1;
                c[1] = (c[1] + 1) >> 1;
            }
        }
        history_ = (history_ << 1) | static_cast<uint64_t>(bit);
        ++processed_;
    }

    int max_order_;
    std::vector<std::vector<uint32_t>> tables_;
    uint64_t history_ = 0;
    uint64_t processed_ = 0;
};

inline std::vector<uint8_t> ppm_encode(const BitBuffer& bits, int max_order = kPpmDefaultOrder) {
    if (bits.empty()) return {};
    PpmModel model(max_order);
    RangeEncoder enc;
    for (size_t i = 0; i < bits.size(); ++i) model.encode_bit(enc, bits.get(i));
    return enc.finish();
}

inline BitBuffer ppm_decode(const std::vector<uint8_t>& bytes, size_t bit_count,
                            int max_order = kPpmDefaultOrder) {
    BitBuffer out;
    if (bit_count == 0) return out;
    PpmModel model(max_order);
    RangeDecoder dec(bytes.data(), bytes.size());
    for (size_t i = 0; i < bit_count; ++i) out.push(model.decode_bit(dec));
    return out;
}

}  // namespace sfc
