#include "catch_amalgamated.hpp"
#include "sfc/bitstream.hpp"
#include "sfc/rng.hpp"
#include "test_util.hpp"

using namespace sfc;

namespace {

std::string bits_to_string(const BitBuffer& b) {
    std::string s;
    for (size_t i = 0; i < b.size(); ++i) s += b.get(i) ? '1' : '0';
    return s;
}

BitBuffer bits_from_string(const std::string& s) {
    BitBuffer b;
    for (char c : s) b.push(c == '1');
    return b;
}

}  // namespace

TEST_CASE("bit buffer basics") {
    BitBuffer b;
    REQUIRE(b.empty());
    b.push(1);
    b.push(0);
    b.push(1);
    b.push(1);
    REQUIRE(b.size() == 4);
    REQUIRE(bits_to_string(b) == "1011");
    REQUIRE(b.read() == 1);
    REQUIRE(b.read() == 0);
    REQUIRE(b.cursor() == 2);
    b.rewind();
    REQUIRE(b.read() == 1);
    while (!b.at_end()) b.read();
    REQUIRE_THROWS_AS(b.read(), DataError);
    REQUIRE(b == bits_from_string("1011"));
    REQUIRE_FALSE(b == bits_from_string("1010"));
    REQUIRE_FALSE(b == bits_from_string("10110"));
}

TEST_CASE("zigzag mapping") {
    // 0 -> 0, 1 -> 1, -1 -> 2, 2 -> 3, -2 -> 4, ...
    REQUIRE(zigzag_map(0) == 0);
    REQUIRE(zigzag_map(1) == 1);
    REQUIRE(zigzag_map(-1) == 2);
    REQUIRE(zigzag_map(2) == 3);
    REQUIRE(zigzag_map(-2) == 4);
    for (int64_t z = -2000; z <= 2000; ++z) REQUIRE(zigzag_unmap(zigzag_map(z)) == z);
    const int64_t big = int64_t{1} << 40;
    REQUIRE(zigzag_unmap(zigzag_map(big)) == big);
    REQUIRE(zigzag_unmap(zigzag_map(-big)) == -big);
}

TEST_CASE("exp-golomb golden table") {
    // Canonical zero-order table, bit-exact.
    const char* golden[16] = {"1",       "010",     "011",     "00100",    "00101",   "00110",
                              "00111",   "0001000", "0001001", "0001010",  "0001011", "0001100",
                              "0001101", "0001110", "0001111", "000010000"};
    for (uint64_t n = 0; n < 16; ++n) {
        BitBuffer b;
        expgolomb_encode(n, b);
        REQUIRE(bits_to_string(b) == golden[n]);
        REQUIRE(expgolomb_length(n) == static_cast<int>(std::string(golden[n]).size()));
        b.rewind();
        REQUIRE(expgolomb_decode(b) == n);
        REQUIRE(b.at_end());
    }
}

TEST_CASE("exp-golomb round-trip and concatenation") {
    Rng rng(40);
    std::vector<uint64_t> values;
    for (int i = 0; i < 2000; ++i) values.push_back(rng.below(1u << 20));
    values.push_back(0);
    values.push_back((uint64_t{1} << 41) - 3);
    BitBuffer b;
    size_t expect_bits = 0;
    for (uint64_t v : values) {
        expgolomb_encode(v, b);
        expect_bits += static_cast<size_t>(expgolomb_length(v));
    }
    REQUIRE(b.size() == expect_bits);
    b.rewind();
    for (uint64_t v : values) REQUIRE(expgolomb_decode(b) == v);
    REQUIRE(b.at_end());
}

TEST_CASE("exp-golomb decode errors") {
    BitBuffer empty;
    REQUIRE_THROWS_AS(expgolomb_decode(empty), DataError);

    BitBuffer prefix_only = bits_from_string("0000");
    REQUIRE_THROWS_AS(expgolomb_decode(prefix_only), DataError);

    BitBuffer short_suffix = bits_from_string("0010");  // needs two suffix bits
    try {
        expgolomb_decode(short_suffix);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("suffix truncated") != std::string::npos);
    }
}

TEST_CASE("range coder round-trips a skewed symbol stream") {
    // Static model: three symbols with cumulative bounds out of 16.
    const uint32_t cum[4] = {0, 11, 14, 16};
    Rng rng(7);
    std::vector<int> symbols;
    for (int i = 0; i < 20000; ++i) {
        const uint32_t f = static_cast<uint32_t>(rng.below(16));
        symbols.push_back(f < 11 ? 0 : (f < 14 ? 1 : 2));
    }
    RangeEncoder enc;
    for (int sym : symbols)
        enc.encode(cum[sym], cum[sym + 1], 16);
    const std::vector<uint8_t> bytes = enc.finish();
    // ~1.2 bits/symbol entropy; allow a few percent of coder overhead.
    REQUIRE(bytes.size() < 20000 * 1.25 / 8.0);

    RangeDecoder dec(bytes.data(), bytes.size());
    for (int want : symbols) {
        const uint32_t f = dec.decode_freq(16);
        const int sym = f < 11 ? 0 : (f < 14 ? 1 : 2);
        dec.decode(cum[sym], cum[sym + 1]);
        REQUIRE(sym == want);
    }
}

TEST_CASE("range decoder reports truncation") {
    RangeEncoder enc;
    for (int i = 0; i < 4000; ++i) enc.encode(i % 2 ? 0 : 1, i % 2 ? 1 : 2, 2);
    std::vector<uint8_t> bytes = enc.finish();
    bytes.resize(bytes.size() / 2);
    RangeDecoder dec(bytes.data(), bytes.size());
    REQUIRE_THROWS_AS(
        [&] {
            for (int i = 0; i < 4000; ++i) {
                const uint32_t f = dec.decode_freq(2);
                dec.decode(f, f + 1);
            }
        }(),
        DataError);
}

TEST_CASE("ppm round-trips random and structured streams") {
    Rng rng(99);
    for (int trial = 0; trial < 4; ++trial) {
        BitBuffer bits;
        const size_t n = 1000 + 3000 * static_cast<size_t>(trial);
        for (size_t i = 0; i < n; ++i) {
            int bit;
            switch (trial) {
                case 0: bit = static_cast<int>(rng.below(2)); break;           // fair coin
                case 1: bit = rng.uniform() < 0.95 ? 1 : 0; break;             // skewed
                case 2: bit = (i / 7) % 2; break;                              // periodic
                default: bit = (i % 13 == 0) ? static_cast<int>(rng.below(2)) : ((i >> 2) & 1);
            }
            bits.push(bit);
        }
        const std::vector<uint8_t> bytes = ppm_encode(bits);
        const BitBuffer back = ppm_decode(bytes, bits.size());
        REQUIRE(back == bits);
        // deterministic: same input, same bytes
        REQUIRE(ppm_encode(bits) == bytes);
    }
}

TEST_CASE("ppm handles degenerate inputs and orders") {
    BitBuffer one;
    one.push(1);
    for (int order : {0, 1, 8, 24}) {
        const std::vector<uint8_t> bytes = ppm_encode(one, order);
        REQUIRE(ppm_decode(bytes, 1, order) == one);
    }
    REQUIRE(ppm_encode(BitBuffer{}).empty());
    REQUIRE(ppm_decode({}, 0).empty());
    REQUIRE_THROWS_AS(PpmModel(-1), ConfigError);
    REQUIRE_THROWS_AS(PpmModel(25), ConfigError);
}

TEST_CASE("ppm encoder and decoder models stay in lockstep") {
    Rng rng(123);
    BitBuffer bits;
    for (int i = 0; i < 5000; ++i) bits.push(rng.uniform() < 0.8 ? 1 : 0);

    PpmModel enc_model(6), dec_model(6);
    RangeEncoder enc;
    for (size_t i = 0; i < bits.size(); ++i) enc_model.encode_bit(enc, bits.get(i));
    const std::vector<uint8_t> bytes = enc.finish();
    RangeDecoder dec(bytes.data(), bytes.size());
    for (size_t i = 0; i < bits.size(); ++i) REQUIRE(dec_model.decode_bit(dec) == bits.get(i));
    REQUIRE(enc_model == dec_model);
}

TEST_CASE("ppm compresses a biased source toward its entropy") {
    // Unit-scale version of the acceptance run: 200k Bernoulli(0.9) bits.
    Rng rng(2024);
    BitBuffer bits;
    const size_t n = 200000;
    size_t ones = 0;
    for (size_t i = 0; i < n; ++i) {
        const int bit = rng.uniform() < 0.9 ? 1 : 0;
        ones += static_cast<size_t>(bit);
        bits.push(bit);
    }
    const double h = oracle::binary_entropy(static_cast<double>(ones) / n);
    const std::vector<uint8_t> bytes = ppm_encode(bits);
    const double bits_per_bit = 8.0 * static_cast<double>(bytes.size()) / static_cast<double>(n);
    REQUIRE(bits_per_bit < 1.10 * h);
    REQUIRE(ppm_decode(bytes, n) == bits);
}

TEST_CASE("latent container round-trip") {
    Rng rng(5);
    std::vector<int64_t> latent(256);
    for (auto& v : latent) v = static_cast<int64_t>(rng.below(101)) - 50;
    const SegmentMask mask = SegmentMask::all();
    const Bitstream bs = compress_latent(latent, mask);
    REQUIRE(bs.latent_length == 256);
    REQUIRE(bs.mask == mask);
    REQUIRE(bs.payload_bits > 0);
    REQUIRE(decompress_latent(bs) == latent);

    // serialized form round-trips too
    const std::vector<uint8_t> bytes = bitstream_to_bytes(bs);
    const Bitstream back = bitstream_from_bytes(bytes);
    REQUIRE(back.mask == bs.mask);
    REQUIRE(back.latent_length == bs.latent_length);
    REQUIRE(back.payload_bits == bs.payload_bits);
    REQUIRE(back.payload == bs.payload);
    REQUIRE(decompress_latent(back) == latent);
}

TEST_CASE("container header layout") {
    const std::vector<int64_t> latent = {0, -1, 3};
    const Bitstream bs = compress_latent(latent, SegmentMask::expression());
    const std::vector<uint8_t> bytes = bitstream_to_bytes(bs);
    REQUIRE(bytes[0] == 'S');
    REQUIRE(bytes[1] == 'F');
    REQUIRE(bytes[2] == 'C');
    REQUIRE(bytes[3] == '1');
    REQUIRE(bytes[4] == 1);                                      // version
    REQUIRE(bytes[5] == SegmentMask::expression().to_byte());    // mask: delta|theta|l
    REQUIRE(bytes[5] == 0b00011100);
    REQUIRE((bytes[6] | bytes[7] << 8) == 3);                    // latent length
    // payload bit count = exp-Golomb bits: 0->1, -1(zz 2)->011, 3(zz 5)->00110
    const uint32_t bit_count = static_cast<uint32_t>(bytes[8]) |
                               (static_cast<uint32_t>(bytes[9]) << 8) |
                               (static_cast<uint32_t>(bytes[10]) << 16) |
                               (static_cast<uint32_t>(bytes[11]) << 24);
    REQUIRE(bit_count == 1 + 3 + 5);
    REQUIRE(bs.total_bytes() == 12 + bs.payload.size());
    REQUIRE(decompress_latent(bitstream_from_bytes(bytes)) == latent);
}

TEST_CASE("container rejects malformed input") {
    const Bitstream bs = compress_latent({1, 2, 3}, SegmentMask::verification());
    const std::vector<uint8_t> good = bitstream_to_bytes(bs);

    std::vector<uint8_t> bad = good;
    bad[0] = 'Z';
    REQUIRE_THROWS_AS(bitstream_from_bytes(bad), DataError);

    bad = good;
    bad[4] = 2;  // version
    REQUIRE_THROWS_AS(bitstream_from_bytes(bad), DataError);

    bad = good;
    bad[5] = 0xC3;  // reserved mask bits
    REQUIRE_THROWS_AS(bitstream_from_bytes(bad), DataError);

    bad = good;
    bad[5] = 0x00;  // empty mask
    REQUIRE_THROWS_AS(bitstream_from_bytes(bad), DataError);

    // payload bit count pointing past the real stream
    Bitstream wrong = bs;
    wrong.payload_bits += 7;
    REQUIRE_THROWS_AS(decompress_latent(wrong), DataError);

    // leftover bits after the declared latent length
    wrong = bs;
    wrong.latent_length = 2;
    REQUIRE_THROWS_AS(decompress_latent(wrong), DataError);
}

TEST_CASE("latent magnitude cap") {
    std::vector<int64_t> latent = {0, kLatentMagnitudeCap};
    REQUIRE_NOTHROW(compress_latent(latent, SegmentMask::all()));
    latent[1] = kLatentMagnitudeCap + 1;
    REQUIRE_THROWS_AS(compress_latent(latent, SegmentMask::all()), NumericError);
    latent[1] = -kLatentMagnitudeCap - 1;
    REQUIRE_THROWS_AS(compress_latent(latent, SegmentMask::all()), NumericError);
    REQUIRE_THROWS_AS(compress_latent({1, 2}, SegmentMask{}), StateError);
}

TEST_CASE("archive round-trip") {
    Rng rng(77);
    std::vector<Bitstream> streams;
    for (int i = 0; i < 5; ++i) {
        std::vector<int64_t> latent(16);
        for (auto& v : latent) v = static_cast<int64_t>(rng.below(21)) - 10;
        streams.push_back(compress_latent(latent, SegmentMask::all()));
    }
    const std::vector<uint8_t> bytes = archive_to_bytes(streams);
    const std::vector<Bitstream> back = archive_from_bytes(bytes);
    REQUIRE(back.size() == streams.size());
    for (size_t i = 0; i < streams.size(); ++i) {
        REQUIRE(back[i].payload == streams[i].payload);
        REQUIRE(decompress_latent(back[i]) == decompress_latent(streams[i]));
    }

    oracle::TempDir dir("sfc_archive_roundtrip");
    save_archive(streams, dir.file("a.sfcs"));
    const std::vector<Bitstream> loaded = load_archive(dir.file("a.sfcs"));
    REQUIRE(loaded.size() == streams.size());

    std::vector<uint8_t> bad = bytes;
    bad.push_back(0);
    REQUIRE_THROWS_AS(archive_from_bytes(bad), DataError);
    bad = bytes;
    bad[0] = 'Q';
    REQUIRE_THROWS_AS(archive_from_bytes(bad), DataError);

    // record error context names the record index
    bad = bytes;
    bad[12] = 'X';  // first record's magic ('SFCS' + u32 count + u32 len = offset 12)
    try {
        archive_from_bytes(bad, "arch");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("record 0") != std::string::npos);
    }
}

TEST_CASE("entropy stack losslessness, unit scale") {
    // Smaller cousin of the acceptance suite sweep: 300 random latents.
    Rng rng(31337);
    for (int i = 0; i < 300; ++i) {
        std::vector<int64_t> latent(256);
        for (auto& v : latent) v = static_cast<int64_t>(rng.below(101)) - 50;
        const Bitstream bs = compress_latent(latent, SegmentMask::all());
        const std::vector<uint8_t> bytes = bitstream_to_bytes(bs);
        REQUIRE(decompress_latent(bitstream_from_bytes(bytes)) == latent);
    }
}
