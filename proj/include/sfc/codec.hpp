#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "sfc/bitstream.hpp"
#include "sfc/checkpoint.hpp"
#include "sfc/corpus.hpp"
#include "sfc/descriptor.hpp"
#include "sfc/entropy_model.hpp"
#include "sfc/errors.hpp"
#include "sfc/nn.hpp"
#include "sfc/rng.hpp"

namespace sfc {

struct TrainConfig {
    double lr = 0.0001;
    double beta1 = 0.5;
    double beta2 = 0.999;
    size_t batch = 64;
    size_t epochs = 40;
    double lambda_mae = 1.0;
    double lambda_r = 0.001;
    uint64_t seed = 1;

    void validate() const {
        if (lr <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
            throw ConfigError("optimizer hyperparameters out of range");
        if (batch == 0 || epochs == 0) throw ConfigError("batch and epochs must be positive");
        if (lambda_mae < 0.0 || lambda_r < 0.0)
            throw ConfigError("loss weights must be non-negative");
    }

    AdamConfig adam() const { return AdamConfig{lr, beta1, beta2, 1e-8}; }
};

// Per-dimension affine standardization fitted on the training corpus; applied
// before g_a, inverted after g_s. MAE is always measured in original space.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stdev;

    static Normalization fit(const std::vector<Vec>& rows) {
        if (rows.empty()) throw ConfigError("cannot fit normalization on an empty corpus");
        const size_t n = rows.front().size();
        Normalization nz;
        nz.mean.assign(n, 0.0);
        nz.stdev.assign(n, 0.0);
        for (const Vec& r : rows)
            for (size_t k = 0; k < n; ++k) nz.mean[k] += r[k];
        for (size_t k = 0; k < n; ++k) nz.mean[k] /= static_cast<double>(rows.size());
        for (const Vec& r : rows)
            for (size_t k = 0; k < n; ++k) {
                const double d = r[k] - nz.mean[k];
                nz.stdev[k] += d * d;
            }
        for (size_t k = 0; k < n; ++k) {
            double s = std::sqrt(nz.stdev[k] / static_cast<double>(rows.size()));
            nz.stdev[k] = s < 1e-6 ? 1e-6 : s;  // constant dims stay finite
        }
        return nz;
    }

    Vec apply(const Vec& x) const {
        Vec z(x.size());
        for (size_t k = 0; k < x.size(); ++k) z[k] = (x[k] - mean[k]) / stdev[k];
        return z;
    }

    Vec invert(const Vec& z) const {
        Vec x(z.size());
        for (size_t k = 0; k < z.size(); ++k) x[k] = z[k] * stdev[k] + mean[k];
        return x;
    }
};

struct CodecModel {
    SegmentMask mask;
    Network encoder;
    Network decoder;
    EntropyModel density;
    Normalization norm;
    double lambda_mae = 1.0;
    double lambda_r = 0.001;
    uint64_t seed = 0;
    uint32_t epochs_run = 0;

    size_t input_width() const { return encoder.in_width(); }
    size_t latent_width() const { return encoder.out_width(); }
};

// g_a: FC(in→hidden) → GDN → residual block → FC(hidden→latent); g_s mirrors
// with IGDN. hidden/latent are knobs only so tests can run toy sizes; the
// codec itself always uses 512/256.
inline CodecModel make_codec_model(const SegmentMask& mask, uint64_t seed,
                                   size_t hidden = 512, size_t latent = 256) {
    if (!mask.any()) throw ConfigError("codec mask selects no segments");
    const size_t in = static_cast<size_t>(mask.active_dims());
    Rng rng(seed);
    CodecModel m;
    m.mask = mask;
    m.seed = seed;
    m.encoder.add(std::make_unique<DenseLayer>(in, hidden, rng));
    m.encoder.add(std::make_unique<GdnLayer>(hidden, false));
    m.encoder.add(std::make_unique<ResidualBlock>(hidden, hidden, rng));
    m.encoder.add(std::make_unique<DenseLayer>(hidden, latent, rng));
    m.decoder.add(std::make_unique<DenseLayer>(latent, hidden, rng));
    m.decoder.add(std::make_unique<ResidualBlock>(hidden, hidden, rng));
    m.decoder.add(std::make_unique<GdnLayer>(hidden, true));
    m.decoder.add(std::make_unique<DenseLayer>(hidden, in, rng));
    m.density = EntropyModel(latent);
    m.norm.mean.assign(in, 0.0);
    m.norm.stdev.assign(in, 1.0);
    return m;
}

inline LatentCode encode_transform(const CodecModel& model, const Vec& active) {
    if (active.size() != model.input_width())
        throw StateError("encode_transform got width " + std::to_string(active.size()) +
                         ", model expects " + std::to_string(model.input_width()));
    LatentCode code;
    code.values = model.encoder.forward(model.norm.apply(active));
    code.stage = LatentStage::kContinuous;
    return code;
}

inline Vec decode_transform(const CodecModel& model, const LatentCode& latent) {
    if (latent.values.size() != model.latent_width())
        throw StateError("decode_transform got latent width " +
                         std::to_string(latent.values.size()) + ", model expects " +
                         std::to_string(model.latent_width()));
    return model.norm.invert(model.decoder.forward(latent.values));
}

struct LossParts {
    double total = 0.0;
    double mae = 0.0;
    double rate = 0.0;
};

inline double mean_abs_error(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw StateError("MAE over mismatched widths");
    double acc = 0.0;
    for (size_t k = 0; k < a.size(); ++k) acc += std::fabs(a[k] - b[k]);
    return acc / static_cast<double>(a.size());
}

inline LossParts codec_loss(const Vec& original, const Vec& recon, const LatentCode& noisy,
                            const EntropyModel& density, const TrainConfig& cfg) {
    LossParts parts;
    parts.mae = mean_abs_error(original, recon);
    parts.rate = rate_loss(density, noisy);
    parts.total = cfg.lambda_mae * parts.mae + cfg.lambda_r * parts.rate;
    return parts;
}

struct TrainedCodec {
    CodecModel model;
    std::vector<LossParts> trace;  // one averaged entry per epoch
};

inline TrainedCodec train_codec(const DescriptorCorpus& corpus, const TrainConfig& cfg,
                                const SegmentMask& mask, size_t hidden = 512,
                                size_t latent = 256) {
    cfg.validate();
    if (corpus.vectors.empty()) throw ConfigError("training corpus is empty");

    std::vector<Vec> rows;
    rows.reserve(corpus.vectors.size());
    for (const Descriptor& w : corpus.vectors) {
        check_descriptor(w);
        rows.push_back(project_portion(w, mask));
    }

    TrainedCodec result;
    result.model = make_codec_model(mask, cfg.seed, hidden, latent);
    CodecModel& model = result.model;
    model.norm = Normalization::fit(rows);
    model.lambda_mae = cfg.lambda_mae;
    model.lambda_r = cfg.lambda_r;

    // Trainable density parameters: mu directly, scale through a softplus
    // surrogate refreshed into the model after every step.
    std::vector<double> s_raw(latent, softplus_inv(1.0 - kScaleFloor));
    std::vector<double> g_mu(latent, 0.0), g_s_raw(latent, 0.0);
    const auto refresh_scales = [&] {
        for (size_t c = 0; c < latent; ++c)
            model.density.scale[c] = kScaleFloor + softplus(s_raw[c]);
    };
    refresh_scales();

    std::vector<ParamView> params = model.encoder.params();
    model.decoder.collect_params(params);
    params.push_back({&model.density.mu, &g_mu});
    params.push_back({&s_raw, &g_s_raw});
    const auto zero_grads = [&] {
        for (ParamView p : params) std::fill(p.grad->begin(), p.grad->end(), 0.0);
    };

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);  // distinct stream from init
    AdamState adam(cfg.adam());
    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), size_t{0});
    const size_t n_active = rows.front().size();

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        LossParts epoch_sum;
        for (size_t start = 0; start < order.size(); start += cfg.batch) {
            const size_t stop = std::min(order.size(), start + cfg.batch);
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            zero_grads();
            double batch_total = 0.0;
            for (size_t s = start; s < stop; ++s) {
                const Vec& active = rows[order[s]];
                const Vec x = model.norm.apply(active);
                const Vec eta = model.encoder.forward(x);
                LatentCode noisy;
                noisy.values.resize(latent);
                for (size_t c = 0; c < latent; ++c)
                    noisy.values[c] = eta[c] + rng.uniform_centered();
                noisy.stage = LatentStage::kNoisy;

                const Vec out_n = model.decoder.forward(noisy.values);
                const Vec recon = model.norm.invert(out_n);

                const LossParts parts = codec_loss(active, recon, noisy, model.density, cfg);
                batch_total += parts.total;
                epoch_sum.total += parts.total;
                epoch_sum.mae += parts.mae;
                epoch_sum.rate += parts.rate;

                // distortion path: d(mae)/d(out_n) through the inverse affine
                Vec d_out(n_active);
                const double mae_w = cfg.lambda_mae * inv_b / static_cast<double>(n_active);
                for (size_t k = 0; k < n_active; ++k) {
                    const double diff = recon[k] - active[k];
                    const double sg = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                    d_out[k] = mae_w * sg * model.norm.stdev[k];
                }
                Vec d_latent = model.decoder.backward(d_out);

                // rate path: analytic logistic gradients
                const double rate_w = cfg.lambda_r * inv_b;
                for (size_t c = 0; c < latent; ++c) {
                    const RateGrad g =
                        rate_grad(model.density.mu[c], model.density.scale[c], noisy.values[c]);
                    d_latent[c] += rate_w * g.d_y;
                    g_mu[c] += rate_w * g.d_mu;
                    g_s_raw[c] += rate_w * g.d_s * stable_sigmoid(s_raw[c]);
                }
                model.encoder.backward(d_latent);
            }
            if (!std::isfinite(batch_total))
                throw NumericError("non-finite codec loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / cfg.batch));
            adam_step(params, adam);
            refresh_scales();
        }
        const double inv_n = 1.0 / static_cast<double>(order.size());
        result.trace.push_back(
            {epoch_sum.total * inv_n, epoch_sum.mae * inv_n, epoch_sum.rate * inv_n});
    }
    model.epochs_run = static_cast<uint32_t>(cfg.epochs);
    return result;
}

inline Bitstream compress(const CodecModel& model, const Descriptor& w) {
    check_descriptor(w);
    const Vec active = project_portion(w, model.mask);
    const LatentCode quantized = quantize_round(encode_transform(model, active));
    return compress_latent(latent_to_ints(quantized), model.mask);
}

inline Descriptor decompress(const CodecModel& model, const Bitstream& bs) {
    if (!(bs.mask == model.mask))
        throw DataError("bitstream mask '" + bs.mask.to_string() + "' does not match model mask '" +
                        model.mask.to_string() + "'");
    if (bs.latent_length != model.latent_width())
        throw DataError("bitstream latent length " + std::to_string(bs.latent_length) +
                        " does not match model latent width " +
                        std::to_string(model.latent_width()));
    const LatentCode latent = latent_from_ints(decompress_latent(bs));
    return expand_portion(decode_transform(model, latent), model.mask);
}

struct RdPoint {
    double avg_bits = 0.0;
    double mae = 0.0;
};

// Exact container accounting: header + payload bits of the real bitstream,
// never the model's rate estimate. MAE over the model's active dims.
inline RdPoint evaluate_rd(const CodecModel& model, const DescriptorCorpus& corpus) {
    if (corpus.vectors.empty()) throw ConfigError("evaluation corpus is empty");
    RdPoint pt;
    for (const Descriptor& w : corpus.vectors) {
        const Bitstream bs = compress(model, w);
        pt.avg_bits += static_cast<double>(bs.total_bits());
        const Descriptor recon = decompress(model, bs);
        pt.mae += mean_abs_error(project_portion(w, model.mask),
                                 project_portion(recon, model.mask));
    }
    const double inv_n = 1.0 / static_cast<double>(corpus.vectors.size());
    pt.avg_bits *= inv_n;
    pt.mae *= inv_n;
    return pt;
}

struct SweepPoint {
    double lambda_r = 0.0;
    RdPoint rd;
};

// One codec per λ_R, identical seed/corpus; trains and evaluates on the
// given corpus, so this traces training-set RD curves for quick sweeps.
inline std::vector<SweepPoint> sweep_lambda(const DescriptorCorpus& corpus,
                                            const TrainConfig& base, const SegmentMask& mask,
                                            const std::vector<double>& lambdas,
                                            size_t hidden = 512, size_t latent = 256) {
    std::vector<SweepPoint> points;
    for (double lr_weight : lambdas) {
        TrainConfig cfg = base;
        cfg.lambda_r = lr_weight;
        TrainedCodec trained = train_codec(corpus, cfg, mask, hidden, latent);
        points.push_back({lr_weight, evaluate_rd(trained.model, corpus)});
    }
    return points;
}

inline std::vector<uint8_t> codec_to_bytes(const CodecModel& model) {
    ByteWriter w;
    write_checkpoint_header(w, "codc");
    w.u8(model.mask.to_byte());
    w.u32(static_cast<uint32_t>(model.input_width()));
    w.u32(static_cast<uint32_t>(model.latent_width()));
    w.f64(model.lambda_mae);
    w.f64(model.lambda_r);
    w.u64(model.seed);
    w.u32(model.epochs_run);
    write_f64_vec(w, model.norm.mean);
    write_f64_vec(w, model.norm.stdev);
    w.u32(static_cast<uint32_t>(model.density.channels()));
    for (size_t c = 0; c < model.density.channels(); ++c) {
        w.f64(model.density.mu[c]);
        w.f64(model.density.scale[c]);
    }
    write_network(w, model.encoder);
    write_network(w, model.decoder);
    return w.take();
}

inline CodecModel codec_from_bytes(const std::vector<uint8_t>& bytes,
                                   const std::string& what = "codec checkpoint") {
    ByteReader r(bytes, what);
    const std::string kind = read_checkpoint_header(r, what);
    if (kind != "codc")
        throw DataError(what + ": checkpoint kind '" + kind + "', expected a codec");
    CodecModel m;
    m.mask = SegmentMask::from_byte(r.u8());
    const uint32_t in = r.u32();
    const uint32_t latent = r.u32();
    m.lambda_mae = r.f64();
    m.lambda_r = r.f64();
    m.seed = r.u64();
    m.epochs_run = r.u32();
    m.norm.mean.resize(in);
    m.norm.stdev.resize(in);
    read_f64_vec(r, m.norm.mean);
    read_f64_vec(r, m.norm.stdev);
    const uint32_t channels = r.u32();
    m.density = EntropyModel(channels);
    for (uint32_t c = 0; c < channels; ++c) {
        m.density.mu[c] = r.f64();
        m.density.scale[c] = r.f64();
    }
    m.encoder = read_network(r, what + " encoder");
    m.decoder = read_network(r, what + " decoder");
    if (r.remaining() != 0) throw DataError(what + ": trailing bytes after decoder");
    if (m.encoder.in_width() != in || m.decoder.out_width() != in ||
        m.encoder.out_width() != latent || m.decoder.in_width() != latent)
        throw DataError(what + ": network widths disagree with header");
    if (static_cast<int>(in) != m.mask.active_dims())
        throw DataError(what + ": input width " + std::to_string(in) +
                        " does not match mask '" + m.mask.to_string() + "'");
    if (channels != latent) throw DataError(what + ": density channel count mismatch");
    return m;
}

inline void save_codec(const CodecModel& model, const std::string& path) {
    write_file_atomic(path, codec_to_bytes(model));
}

inline CodecModel load_codec(const std::string& path) {
    return codec_from_bytes(read_file(path), path);
}

}  // namespace sfc
