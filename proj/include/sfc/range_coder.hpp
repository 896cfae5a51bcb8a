#pragma once

#include <cstdint>
#include <vector>

#include "sfc/errors.hpp"

namespace sfc {

// 32-bit range coder, byte-aligned output. Carries are absorbed by keeping
// `low` in 64 bits and propagating through a run of pending 0xFF bytes at
// renormalization time. Integer arithmetic only, so encoder and decoder are
// bit-exact across platforms.
//
// Frequencies: a symbol occupies [cum_low, cum_high) out of `total`, with
// total <= 2^22 so the range never collapses to zero between renorms.

inline constexpr uint32_t kRangeTop = 1u << 24;
inline constexpr uint32_t kRangeMaxTotal = 1u << 22;

class RangeEncoder {
public:
    void encode(uint32_t cum_low, uint32_t cum_high, uint32_t total) {
        const uint32_t r = range_ / total;
        low_ += static_cast<uint64_t>(r) * cum_low;
        range_ = r * (cum_high - cum_low);
        while (range_ < kRangeTop) {
            shift_low();
            range_ <<= 8;
        }
    }

    // Appends the final bytes; the encoder must not be reused afterwards.
    std::vector<uint8_t> finish() {
        for (int i = 0; i < 5; ++i) shift_low();
        return std::move(out_);
    }

private:
    void shift_low() {
        if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
            const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
            do {
                out_.push_back(static_cast<uint8_t>(cache_ + carry));
                cache_ = 0xFF;
            } while (--pending_ != 0);
            cache_ = static_cast<uint8_t>(low_ >> 24);
        }
        ++pending_;
        low_ = (low_ << 8) & 0xFFFFFFFFull;
    }

    std::vector<uint8_t> out_;
    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint8_t cache_ = 0;
    uint64_t pending_ = 1;
};

class RangeDecoder {
public:
    RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
        for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
    }

    // Returns the cumulative frequency the next symbol falls in; the caller
    // resolves the symbol and confirms with decode().
    uint32_t decode_freq(uint32_t total) {
        r_ = range_ / total;
        const uint32_t f = code_ / r_;
        return f >= total ? total - 1 : f;
    }

    void decode(uint32_t cum_low, uint32_t cum_high) {
        code_ -= r_ * cum_low;
        range_ = r_ * (cum_high - cum_low);
        while (range_ < kRangeTop) {
            code_ = (code_ << 8) | next_byte();
            range_ <<= 8;
        }
    }

    size_t consumed() const { return pos_; }

private:
    uint8_t next_byte() {
        if (pos_ < size_) return data_[pos_++];
        // The encoder's flush covers all real reads; a bounded number of
        // virtual zero bytes services the final renormalizations.
        if (++overrun_ > 8) throw DataError("range coder payload truncated");
        return 0;
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    int overrun_ = 0;
    uint32_t code_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t r_ = 1;
};

}  // namespace sfc
