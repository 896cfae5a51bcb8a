#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sfc/errors.hpp"
#include "sfc/nn.hpp"
#include "sfc/serialize.hpp"

namespace sfc {

// "SFM1" checkpoint: magic, u8 version, 4-char kind tag (codc/expr/verf),
// then the kind-specific payload. Networks serialize as a layer count plus
// per-layer kind tag, shape, and raw f64 parameters — GDN stores its raw
// surrogates so save/load round-trips bit-exactly.
inline constexpr uint8_t kCheckpointVersion = 1;

inline void write_f64_vec(ByteWriter& w, const std::vector<double>& v) {
    for (double x : v) w.f64(x);
}

inline void read_f64_vec(ByteReader& r, std::vector<double>& v) {
    for (double& x : v) x = r.f64();
}

inline void write_dense_params(ByteWriter& w, const DenseLayer& d) {
    write_f64_vec(w, d.w);
    write_f64_vec(w, d.b);
}

inline void read_dense_params(ByteReader& r, DenseLayer& d) {
    read_f64_vec(r, d.w);
    read_f64_vec(r, d.b);
}

inline void write_network(ByteWriter& w, const Network& net) {
    w.u32(static_cast<uint32_t>(net.layers.size()));
    for (const auto& lp : net.layers) {
        const std::string kind = lp->kind();
        if (kind == "dense") {
            const auto& d = static_cast<const DenseLayer&>(*lp);
            w.magic("dens");
            w.u32(static_cast<uint32_t>(d.in));
            w.u32(static_cast<uint32_t>(d.out));
            write_dense_params(w, d);
        } else if (kind == "relu") {
            w.magic("relu");
            w.u32(static_cast<uint32_t>(lp->in_width()));
        } else if (kind == "gdn" || kind == "igdn") {
            const auto& g = static_cast<const GdnLayer&>(*lp);
            w.magic(g.inverse ? "gdni" : "gdnf");
            w.u32(static_cast<uint32_t>(g.n));
            write_f64_vec(w, g.beta_raw);
            write_f64_vec(w, g.gamma_raw);
        } else if (kind == "resblock") {
            const auto& rb = static_cast<const ResidualBlock&>(*lp);
            w.magic("resb");
            w.u32(static_cast<uint32_t>(rb.in_width()));
            w.u32(static_cast<uint32_t>(rb.out_width()));
            write_dense_params(w, rb.fc1);
            write_dense_params(w, rb.fc2);
            if (rb.proj) write_dense_params(w, *rb.proj);
        } else {
            throw StateError("cannot serialize layer kind " + kind);
        }
    }
}

inline Network read_network(ByteReader& r, const std::string& what) {
    Network net;
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        const std::string tag = r.tag4(what + " layer kind");
        if (tag == "dens") {
            const uint32_t in = r.u32();
            const uint32_t out = r.u32();
            auto d = std::make_unique<DenseLayer>(in, out);
            read_dense_params(r, *d);
            net.add(std::move(d));
        } else if (tag == "relu") {
            net.add(std::make_unique<ReluLayer>(r.u32()));
        } else if (tag == "gdnf" || tag == "gdni") {
            const uint32_t n = r.u32();
            auto g = std::make_unique<GdnLayer>(n, tag == "gdni");
            read_f64_vec(r, g->beta_raw);
            read_f64_vec(r, g->gamma_raw);
            net.add(std::move(g));
        } else if (tag == "resb") {
            const uint32_t in = r.u32();
            const uint32_t out = r.u32();
            auto rb = std::make_unique<ResidualBlock>(in, out);
            read_dense_params(r, rb->fc1);
            read_dense_params(r, rb->fc2);
            if (rb->proj) read_dense_params(r, *rb->proj);
            net.add(std::move(rb));
        } else {
            throw DataError(what + ": unknown layer kind '" + tag + "'");
        }
    }
    return net;
}

inline void write_checkpoint_header(ByteWriter& w, const char* kind4) {
    w.magic("SFM1");
    w.u8(kCheckpointVersion);
    w.magic(kind4);
}

// Returns the 4-char kind tag after validating magic and version.
inline std::string read_checkpoint_header(ByteReader& r, const std::string& what) {
    r.expect_magic("SFM1", "SFM1 checkpoint");
    const uint8_t version = r.u8();
    if (version != kCheckpointVersion)
        throw DataError(what + ": unsupported SFM1 version " + std::to_string(version));
    return r.tag4(what + " kind tag");
}

}  // namespace sfc
