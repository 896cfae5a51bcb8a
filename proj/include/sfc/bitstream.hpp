#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sfc/bitio.hpp"
#include "sfc/descriptor.hpp"
#include "sfc/errors.hpp"
#include "sfc/expgolomb.hpp"
#include "sfc/ppm.hpp"
#include "sfc/serialize.hpp"

namespace sfc {

// One coded descriptor. Container "SFC1" (little-endian):
//   magic "SFC1", u8 version=1, u8 segment mask (bit i = segment i, bits 6-7
//   zero), u16 latent length, u32 payload bit count, payload bytes.
// The payload is the PPM-coded stream; the bit count is the number of
// exp-Golomb bits it decodes to (the payload's own last byte is zero-padded
// by the range coder's byte alignment).
struct Bitstream {
    SegmentMask mask;
    uint16_t latent_length = 0;
    uint32_t payload_bits = 0;
    std::vector<uint8_t> payload;

    size_t total_bytes() const { return 12 + payload.size(); }
    size_t total_bits() const { return 8 * total_bytes(); }
};

// Encoder-side cap on latent magnitudes; trained latents sit far below it.
inline constexpr int64_t kLatentMagnitudeCap = int64_t{1} << 20;

inline Bitstream compress_latent(const std::vector<int64_t>& latent, const SegmentMask& mask) {
    if (latent.size() > 0xFFFF) throw StateError("latent length exceeds u16 range");
    if (!mask.any()) throw StateError("segment mask selects no segments");
    BitBuffer bits;
    for (int64_t v : latent) {
        if (v > kLatentMagnitudeCap || v < -kLatentMagnitudeCap)
            throw NumericError("latent value " + std::to_string(v) +
                               " exceeds the magnitude cap");
        expgolomb_encode(zigzag_map(v), bits);
    }
    Bitstream out;
    out.mask = mask;
    out.latent_length = static_cast<uint16_t>(latent.size());
    out.payload_bits = static_cast<uint32_t>(bits.size());
    out.payload = ppm_encode(bits);
    return out;
}

inline std::vector<int64_t> decompress_latent(const Bitstream& bs) {
    BitBuffer bits = ppm_decode(bs.payload, bs.payload_bits);
    bits.rewind();
    std::vector<int64_t> latent(bs.latent_length);
    for (auto& v : latent) v = zigzag_unmap(expgolomb_decode(bits));
    if (!bits.at_end())
        throw DataError("payload bit count mismatch: " +
                        std::to_string(bits.size() - bits.cursor()) + " bits left over");
    return latent;
}

inline std::vector<uint8_t> bitstream_to_bytes(const Bitstream& bs) {
    ByteWriter w;
    w.magic("SFC1");
    w.u8(1);
    w.u8(bs.mask.to_byte());
    w.u16(bs.latent_length);
    w.u32(bs.payload_bits);
    w.bytes(bs.payload.data(), bs.payload.size());
    return w.take();
}

inline Bitstream bitstream_from_bytes(const std::vector<uint8_t>& bytes,
                                      const std::string& what = "bitstream") {
    ByteReader r(bytes, what);
    r.expect_magic("SFC1", "SFC1");
    const uint8_t version = r.u8();
    if (version != 1)
        throw DataError(what + ": unsupported SFC1 version " + std::to_string(version));
    Bitstream bs;
    bs.mask = SegmentMask::from_byte(r.u8());
    bs.latent_length = r.u16();
    bs.payload_bits = r.u32();
    const size_t n = r.remaining();
    const uint8_t* p = r.raw(n);
    bs.payload.assign(p, p + n);
    return bs;
}

// Archive ".sfcs": magic "SFCS", u32 record count, then per record a u32 byte
// length followed by the SFC1 record.
inline std::vector<uint8_t> archive_to_bytes(const std::vector<Bitstream>& streams) {
    ByteWriter w;
    w.magic("SFCS");
    w.u32(static_cast<uint32_t>(streams.size()));
    for (const Bitstream& bs : streams) {
        const std::vector<uint8_t> rec = bitstream_to_bytes(bs);
        w.u32(static_cast<uint32_t>(rec.size()));
        w.bytes(rec.data(), rec.size());
    }
    return w.take();
}

inline std::vector<Bitstream> archive_from_bytes(const std::vector<uint8_t>& bytes,
                                                 const std::string& what = "archive") {
    ByteReader r(bytes, what);
    r.expect_magic("SFCS", "SFCS");
    const uint32_t count = r.u32();
    std::vector<Bitstream> streams;
    streams.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t len = r.u32();
        const uint8_t* p = r.raw(len);
        streams.push_back(
            bitstream_from_bytes(std::vector<uint8_t>(p, p + len),
                                 what + " record " + std::to_string(i)));
    }
    if (r.remaining() != 0) throw DataError(what + ": trailing bytes after last record");
    return streams;
}

inline void save_archive(const std::vector<Bitstream>& streams, const std::string& path) {
    write_file_atomic(path, archive_to_bytes(streams));
}

inline std::vector<Bitstream> load_archive(const std::string& path) {
    return archive_from_bytes(read_file(path), path);
}

}  // namespace sfc
