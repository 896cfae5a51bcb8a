#pragma once

#include <cstdint>
#include <string>

#include "sfc/bitio.hpp"
#include "sfc/errors.hpp"

namespace sfc {

// Zero-order exponential-Golomb code for n >= 0:
// floor(log2(n+1)) leading zeros, then (n+1) in binary.
//   0 -> 1, 1 -> 010, 2 -> 011, 3 -> 00100, ...

inline void expgolomb_encode(uint64_t n, BitBuffer& out) {
    const uint64_t v = n + 1;
    int top = 63;
    while (!((v >> top) & 1)) --top;  // v >= 1, loop terminates
    for (int i = 0; i < top; ++i) out.push(0);
    for (int i = top; i >= 0; --i) out.push(static_cast<int>((v >> i) & 1));
}

inline uint64_t expgolomb_decode(BitBuffer& in) {
    int zeros = 0;
    for (;;) {
        if (in.at_end())
            throw DataError("exp-golomb prefix truncated at bit " + std::to_string(in.cursor()));
        if (in.read()) break;
        ++zeros;
        if (zeros > 63)
            throw DataError("exp-golomb prefix too long at bit " + std::to_string(in.cursor()));
    }
    uint64_t v = 1;
    for (int i = 0; i < zeros; ++i) {
        if (in.at_end())
            throw DataError("exp-golomb suffix truncated at bit " + std::to_string(in.cursor()));
        v = (v << 1) | static_cast<uint64_t>(in.read());
    }
    return v - 1;
}

// Bit length of the code for n, 2*floor(log2(n+1)) + 1.
inline int expgolomb_length(uint64_t n) {
    const uint64_t v = n + 1;
    int top = 63;
    while (!((v >> top) & 1)) --top;
    return 2 * top + 1;
}

// Signed-to-unsigned zigzag: 0 -> 0, 1 -> 1, -1 -> 2, 2 -> 3, -2 -> 4, ...
inline uint64_t zigzag_map(int64_t z) {
    return z > 0 ? 2 * static_cast<uint64_t>(z) - 1
                 : 2 * static_cast<uint64_t>(-z);
}

inline int64_t zigzag_unmap(uint64_t m) {
    return (m & 1) ? static_cast<int64_t>((m + 1) / 2)
                   : -static_cast<int64_t>(m / 2);
}

}  // namespace sfc
