#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "sfc/errors.hpp"
#include "sfc/rng.hpp"

namespace sfc {

inline constexpr double kScaleFloor = 1e-4;
// Interval masses are clamped below at 2^-64 before taking the log.
inline double min_interval_mass() { return std::ldexp(1.0, -64); }

inline double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Inverse of softplus for y > 0.
inline double softplus_inv(double y) { return y + std::log1p(-std::exp(-y)); }

enum class LatentStage : uint8_t { kContinuous, kNoisy, kQuantized };

inline const char* latent_stage_name(LatentStage s) {
    switch (s) {
        case LatentStage::kContinuous: return "continuous";
        case LatentStage::kNoisy: return "noisy";
        case LatentStage::kQuantized: return "quantized";
    }
    return "?";
}

// A latent vector tagged with how it was produced, so the quantizer and the
// noise surrogate cannot be applied twice or out of order.
struct LatentCode {
    std::vector<double> values;
    LatentStage stage = LatentStage::kContinuous;
};

inline void require_stage(const LatentCode& code, LatentStage want, const char* op) {
    if (code.stage != want)
        throw StateError(std::string(op) + " expects a " + latent_stage_name(want) +
                         " latent, got " + latent_stage_name(code.stage));
}

// Training-time quantization surrogate: i.i.d. U(-0.5, 0.5) per channel.
inline LatentCode add_uniform_noise(const LatentCode& code, Rng& rng) {
    require_stage(code, LatentStage::kContinuous, "add_uniform_noise");
    LatentCode out;
    out.values.reserve(code.values.size());
    for (double v : code.values) out.values.push_back(v + rng.uniform_centered());
    out.stage = LatentStage::kNoisy;
    return out;
}

// Round half away from zero, the deployment-time quantizer.
inline LatentCode quantize_round(const LatentCode& code) {
    require_stage(code, LatentStage::kContinuous, "quantize_round");
    LatentCode out;
    out.values.reserve(code.values.size());
    for (double v : code.values) {
        if (!std::isfinite(v)) throw NumericError("quantize_round: non-finite latent value");
        out.values.push_back(static_cast<double>(std::llround(v)));
    }
    out.stage = LatentStage::kQuantized;
    return out;
}

inline std::vector<int64_t> latent_to_ints(const LatentCode& code) {
    require_stage(code, LatentStage::kQuantized, "latent_to_ints");
    std::vector<int64_t> out;
    out.reserve(code.values.size());
    for (double v : code.values) out.push_back(static_cast<int64_t>(v));
    return out;
}

inline LatentCode latent_from_ints(const std::vector<int64_t>& q) {
    LatentCode code;
    code.values.assign(q.begin(), q.end());
    code.stage = LatentStage::kQuantized;
    return code;
}

// Per-channel logistic density over the latent space. `scale` holds the
// effective scales (floor already applied); the raw softplus parameterization
// lives in the trainer, which refreshes `scale` after every step.
struct EntropyModel {
    std::vector<double> mu;
    std::vector<double> scale;

    explicit EntropyModel(size_t channels = 0)
        : mu(channels, 0.0), scale(channels, 1.0) {}

    size_t channels() const { return mu.size(); }

    void check(size_t want) const {
        if (mu.size() != want || scale.size() != want)
            throw StateError("entropy model has " + std::to_string(mu.size()) +
                             " channels, expected " + std::to_string(want));
    }
};

// Mass the logistic assigns to the width-1 bin centred on y. Evaluated on
// whichever tail keeps the two sigmoids small, so nearby large CDF values
// never cancel.
inline double interval_mass(double mu, double s, double y) {
    const double a = (y - mu + 0.5) / s;
    const double b = (y - mu - 0.5) / s;
    double m;
    if (a + b > 0.0)
        m = stable_sigmoid(-b) - stable_sigmoid(-a);
    else
        m = stable_sigmoid(a) - stable_sigmoid(b);
    const double floor = min_interval_mass();
    return m < floor ? floor : m;
}

inline double rate_bits(double mu, double s, double y) {
    return -std::log2(interval_mass(mu, s, y));
}

// Code length in bits the model assigns to one latent vector.
inline double rate_loss(const EntropyModel& model, const std::vector<double>& values) {
    model.check(values.size());
    double bits = 0.0;
    for (size_t c = 0; c < values.size(); ++c)
        bits += rate_bits(model.mu[c], model.scale[c], values[c]);
    return bits;
}

inline double rate_loss(const EntropyModel& model, const LatentCode& code) {
    if (code.stage == LatentStage::kContinuous)
        throw StateError("rate_loss expects a noisy or quantized latent, got continuous");
    return rate_loss(model, code.values);
}

struct RateGrad {
    double d_y = 0.0;
    double d_mu = 0.0;
    double d_s = 0.0;  // wrt the effective scale, not the raw parameter
};

// Analytic gradient of rate_bits. Zero when the mass clamp is active.
inline RateGrad rate_grad(double mu, double s, double y) {
    const double a = (y - mu + 0.5) / s;
    const double b = (y - mu - 0.5) / s;
    double m;
    if (a + b > 0.0)
        m = stable_sigmoid(-b) - stable_sigmoid(-a);
    else
        m = stable_sigmoid(a) - stable_sigmoid(b);
    RateGrad g;
    if (m < min_interval_mass()) return g;

    const auto dsig = [](double x) {
        const double t = stable_sigmoid(-std::fabs(x));
        return t * (1.0 - t);
    };
    const double da = dsig(a);
    const double db = dsig(b);
    const double d_rate_d_mass = -1.0 / (m * std::numbers::ln2);
    g.d_y = d_rate_d_mass * (da - db) / s;
    g.d_mu = -g.d_y;
    g.d_s = d_rate_d_mass * (-(da * a - db * b) / s);
    return g;
}

}  // namespace sfc
