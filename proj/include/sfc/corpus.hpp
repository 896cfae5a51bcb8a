#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfc/descriptor.hpp"
#include "sfc/rng.hpp"
#include "sfc/serialize.hpp"

namespace sfc {

struct DescriptorCorpus {
    std::vector<Descriptor> vectors;
    std::optional<std::vector<uint16_t>> labels;

    size_t size() const { return vectors.size(); }

    void check(int class_count = -1) const {
        if (labels) {
            if (labels->size() != vectors.size())
                throw DataError("corpus has " + std::to_string(labels->size()) + " labels for " +
                                std::to_string(vectors.size()) + " vectors");
            if (class_count >= 0)
                for (uint16_t l : *labels)
                    if (l >= class_count)
                        throw DataError("label " + std::to_string(l) + " outside class count " +
                                        std::to_string(class_count));
        }
        for (const Descriptor& w : vectors) check_descriptor(w);
    }
};

enum class SyntheticTask { expression, identity };

struct SyntheticConfig {
    int class_count = 8;
    int samples_per_class = 200;
    double class_mean_scale = 1.0;
    double noise_scale = 0.1;
    uint64_t seed = 1;
    SyntheticTask task = SyntheticTask::expression;

    void validate() const {
        if (class_count < 1) throw ConfigError("class_count must be positive");
        if (class_count > 65535) throw ConfigError("class_count exceeds the u16 label range");
        if (samples_per_class < 1) throw ConfigError("samples_per_class must be positive");
        if (!(class_mean_scale > 0.0)) throw ConfigError("class_mean_scale must be positive");
        if (!(noise_scale > 0.0)) throw ConfigError("noise_scale must be positive");
        if (!(noise_scale < class_mean_scale))
            throw ConfigError("noise_scale must be below class_mean_scale for a separable corpus");
    }
};

// Class-conditional isotropic Gaussians. Class means live only in the
// task-relevant segments (expression: delta/theta/l, identity: alpha/beta);
// every other segment is shared zero-mean noise, so classes are
// indistinguishable there. Samples are emitted grouped by class.
inline DescriptorCorpus generate_synthetic_corpus(const SyntheticConfig& cfg) {
    cfg.validate();
    const SegmentMask active = cfg.task == SyntheticTask::expression
                                   ? SegmentMask::expression()
                                   : SegmentMask::verification();
    Rng rng(cfg.seed);

    std::vector<Descriptor> means(static_cast<size_t>(cfg.class_count));
    for (auto& mean : means) {
        mean.assign(kDescriptorDim, 0.0);
        for (int s = 0; s < kSegmentCount; ++s) {
            if (!active.flags[static_cast<size_t>(s)]) continue;
            const int off = kSegmentOffsets[static_cast<size_t>(s)];
            const int dim = kSegmentDims[static_cast<size_t>(s)];
            for (int d = 0; d < dim; ++d)
                mean[static_cast<size_t>(off + d)] = cfg.class_mean_scale * rng.normal();
        }
    }

    DescriptorCorpus corpus;
    corpus.vectors.reserve(static_cast<size_t>(cfg.class_count) *
                           static_cast<size_t>(cfg.samples_per_class));
    corpus.labels.emplace();
    corpus.labels->reserve(corpus.vectors.capacity());
    for (int c = 0; c < cfg.class_count; ++c) {
        for (int i = 0; i < cfg.samples_per_class; ++i) {
            Descriptor w(kDescriptorDim);
            // Rounded through f32 so the in-memory corpus matches its own
            // SFD1 file bit-exactly.
            for (int d = 0; d < kDescriptorDim; ++d)
                w[static_cast<size_t>(d)] = static_cast<double>(static_cast<float>(
                    means[static_cast<size_t>(c)][static_cast<size_t>(d)] +
                    cfg.noise_scale * rng.normal()));
            corpus.vectors.push_back(std::move(w));
            corpus.labels->push_back(static_cast<uint16_t>(c));
        }
    }
    return corpus;
}

// Deterministic stratified split: every `holdout_stride`-th item per running
// index goes to the held-out set. With class-grouped corpora whose per-class
// count is a multiple of the stride this is exactly stratified.
inline void split_corpus(const DescriptorCorpus& corpus, int holdout_stride,
                         DescriptorCorpus& train, DescriptorCorpus& test) {
    if (holdout_stride < 2) throw ConfigError("holdout_stride must be at least 2");
    train = DescriptorCorpus{};
    test = DescriptorCorpus{};
    if (corpus.labels) {
        train.labels.emplace();
        test.labels.emplace();
    }
    for (size_t i = 0; i < corpus.vectors.size(); ++i) {
        const bool held_out = (i % static_cast<size_t>(holdout_stride)) ==
                              static_cast<size_t>(holdout_stride) - 1;
        DescriptorCorpus& dst = held_out ? test : train;
        dst.vectors.push_back(corpus.vectors[i]);
        if (corpus.labels) dst.labels->push_back((*corpus.labels)[i]);
    }
}

// Corpus file format "SFD1" (little-endian):
//   magic "SFD1", u8 version=1, u8 has_labels, u16 dim (=257), u32 count,
//   count*dim f32 values row-major, then count u16 labels if has_labels.
inline std::vector<uint8_t> corpus_to_bytes(const DescriptorCorpus& corpus) {
    corpus.check();
    ByteWriter w;
    w.magic("SFD1");
    w.u8(1);
    w.u8(corpus.labels ? 1 : 0);
    w.u16(static_cast<uint16_t>(kDescriptorDim));
    w.u32(static_cast<uint32_t>(corpus.vectors.size()));
    for (const Descriptor& v : corpus.vectors)
        for (double x : v) w.f32(static_cast<float>(x));
    if (corpus.labels)
        for (uint16_t l : *corpus.labels) w.u16(l);
    return w.take();
}

inline DescriptorCorpus corpus_from_bytes(const std::vector<uint8_t>& bytes,
                                          const std::string& what = "corpus") {
    ByteReader r(bytes, what);
    r.expect_magic("SFD1", "SFD1");
    const uint8_t version = r.u8();
    if (version != 1)
        throw DataError(what + ": unsupported SFD1 version " + std::to_string(version));
    const uint8_t has_labels = r.u8();
    if (has_labels > 1) throw DataError(what + ": has_labels flag must be 0 or 1");
    const uint16_t dim = r.u16();
    if (dim != kDescriptorDim)
        throw DataError(what + ": dimension is " + std::to_string(dim) + ", expected " +
                        std::to_string(kDescriptorDim));
    const uint32_t count = r.u32();
    DescriptorCorpus corpus;
    corpus.vectors.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        Descriptor& v = corpus.vectors[i];
        v.resize(kDescriptorDim);
        for (int d = 0; d < kDescriptorDim; ++d) {
            const float x = r.f32();
            if (!std::isfinite(x))
                throw DataError(what + ": non-finite value in vector " + std::to_string(i));
            v[static_cast<size_t>(d)] = x;
        }
    }
    if (has_labels) {
        corpus.labels.emplace(count);
        for (uint32_t i = 0; i < count; ++i) (*corpus.labels)[i] = r.u16();
    }
    if (r.remaining() != 0) throw DataError(what + ": trailing bytes after corpus payload");
    return corpus;
}

inline void save_corpus(const DescriptorCorpus& corpus, const std::string& path) {
    write_file_atomic(path, corpus_to_bytes(corpus));
}

inline DescriptorCorpus load_corpus(const std::string& path) {
    return corpus_from_bytes(read_file(path), path);
}

}  // namespace sfc
