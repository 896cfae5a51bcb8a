#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfc/errors.hpp"

namespace sfc {

// Append-only bit sequence with a read cursor. Bits are packed MSB-first
// within each byte.
class BitBuffer {
public:
    BitBuffer() = default;

    void push(int bit) {
        const size_t byte = size_ >> 3;
        if (byte == bytes_.size()) bytes_.push_back(0);
        if (bit) bytes_[byte] |= static_cast<uint8_t>(0x80u >> (size_ & 7));
        ++size_;
    }

    int get(size_t index) const {
        return (bytes_[index >> 3] >> (7 - (index & 7))) & 1;
    }

    size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    void rewind() { cursor_ = 0; }
    size_t cursor() const { return cursor_; }
    bool at_end() const { return cursor_ == size_; }

    int read() {
        if (cursor_ >= size_)
            throw DataError("bit buffer exhausted at bit " + std::to_string(cursor_));
        return get(cursor_++);
    }

    bool operator==(const BitBuffer& other) const {
        if (size_ != other.size_) return false;
        for (size_t i = 0; i < size_; ++i)
            if (get(i) != other.get(i)) return false;
        return true;
    }

private:
    std::vector<uint8_t> bytes_;
    size_t size_ = 0;
    size_t cursor_ = 0;
};

}  // namespace sfc
