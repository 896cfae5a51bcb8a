#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sfc/errors.hpp"
#include "sfc/rng.hpp"

namespace sfc {

using Vec = std::vector<double>;

inline constexpr double kGdnBetaFloor = 1e-6;

// One trainable tensor exposed as flat storage plus its gradient accumulator.
struct ParamView {
    std::vector<double>* value;
    std::vector<double>* grad;
};

// All layers run one vector at a time; batching is a loop in the trainer.
// forward() caches what backward() needs; backward() accumulates parameter
// gradients, returns the input gradient, and consumes the cache.
class Layer {
  public:
    virtual ~Layer() = default;
    virtual size_t in_width() const = 0;
    virtual size_t out_width() const = 0;
    virtual std::string kind() const = 0;
    virtual Vec forward(const Vec& x) = 0;
    virtual Vec backward(const Vec& d_out) = 0;
    virtual void collect_params(std::vector<ParamView>& out) {}

  protected:
    void check_in(const Vec& x) const {
        if (x.size() != in_width())
            throw StateError(kind() + " layer expects width " + std::to_string(in_width()) +
                             ", got " + std::to_string(x.size()));
    }
    void check_out_grad(const Vec& d) const {
        if (d.size() != out_width())
            throw StateError(kind() + " layer expects gradient width " +
                             std::to_string(out_width()) + ", got " + std::to_string(d.size()));
    }
    void require_cached(bool cached) const {
        if (!cached) throw StateError(kind() + " backward called without a recorded forward");
    }
};

class DenseLayer : public Layer {
  public:
    size_t in = 0, out = 0;
    std::vector<double> w;   // row-major out×in
    std::vector<double> b;
    std::vector<double> gw;
    std::vector<double> gb;

    DenseLayer(size_t in_width, size_t out_width)
        : in(in_width), out(out_width), w(in * out, 0.0), b(out, 0.0),
          gw(in * out, 0.0), gb(out, 0.0) {}

    // He-style uniform fan-in init.
    DenseLayer(size_t in_width, size_t out_width, Rng& rng)
        : DenseLayer(in_width, out_width) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in));
        for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * limit;
    }

    size_t in_width() const override { return in; }
    size_t out_width() const override { return out; }
    std::string kind() const override { return "dense"; }

    Vec forward(const Vec& x) override {
        check_in(x);
        x_ = x;
        cached_ = true;
        Vec y(out);
        for (size_t i = 0; i < out; ++i) {
            const double* row = w.data() + i * in;
            double acc = b[i];
            for (size_t k = 0; k < in; ++k) acc += row[k] * x[k];
            y[i] = acc;
        }
        return y;
    }

    Vec backward(const Vec& d_y) override {
        check_out_grad(d_y);
        require_cached(cached_);
        cached_ = false;
        Vec d_x(in, 0.0);
        for (size_t i = 0; i < out; ++i) {
            const double g = d_y[i];
            gb[i] += g;
            const double* row = w.data() + i * in;
            double* grow = gw.data() + i * in;
            for (size_t k = 0; k < in; ++k) {
                grow[k] += g * x_[k];
                d_x[k] += g * row[k];
            }
        }
        return d_x;
    }

    void collect_params(std::vector<ParamView>& outp) override {
        outp.push_back({&w, &gw});
        outp.push_back({&b, &gb});
    }

  private:
    Vec x_;
    bool cached_ = false;
};

class ReluLayer : public Layer {
  public:
    explicit ReluLayer(size_t width) : n_(width) {}

    size_t in_width() const override { return n_; }
    size_t out_width() const override { return n_; }
    std::string kind() const override { return "relu"; }

    Vec forward(const Vec& x) override {
        check_in(x);
        x_ = x;
        cached_ = true;
        Vec y(n_);
        for (size_t i = 0; i < n_; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        return y;
    }

    Vec backward(const Vec& d_y) override {
        check_out_grad(d_y);
        require_cached(cached_);
        cached_ = false;
        Vec d_x(n_);
        for (size_t i = 0; i < n_; ++i) d_x[i] = x_[i] > 0.0 ? d_y[i] : 0.0;
        return d_x;
    }

  private:
    size_t n_;
    Vec x_;
    bool cached_ = false;
};

// GDN: y_i = x_i / sqrt(beta_i + Σ_j gamma_ij x_j²); IGDN multiplies instead.
// Positivity comes from surrogates: beta = beta_raw² + 1e-6, gamma = gamma_raw².
class GdnLayer : public Layer {
  public:
    size_t n = 0;
    bool inverse = false;
    std::vector<double> beta_raw;    // n
    std::vector<double> gamma_raw;   // n×n row-major
    std::vector<double> g_beta_raw;
    std::vector<double> g_gamma_raw;

    GdnLayer(size_t width, bool igdn)
        : n(width), inverse(igdn), beta_raw(width, 1.0), gamma_raw(width * width, 0.0),
          g_beta_raw(width, 0.0), g_gamma_raw(width * width, 0.0) {
        // sqrt keeps the effective gamma at 0.1 on the diagonal and 1e-3 off
        // it; a zero raw value would freeze the entry (gradient ∝ raw).
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                gamma_raw[i * n + j] = std::sqrt((i == j ? 0.1 : 0.0) + 1e-3);
    }

    double beta(size_t i) const { return beta_raw[i] * beta_raw[i] + kGdnBetaFloor; }
    double gamma(size_t i, size_t j) const {
        const double r = gamma_raw[i * n + j];
        return r * r;
    }

    size_t in_width() const override { return n; }
    size_t out_width() const override { return n; }
    std::string kind() const override { return inverse ? "igdn" : "gdn"; }

    Vec forward(const Vec& x) override {
        check_in(x);
        x_ = x;
        z_.assign(n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            double acc = beta(i);
            const double* row = gamma_raw.data() + i * n;
            for (size_t j = 0; j < n; ++j) acc += row[j] * row[j] * x[j] * x[j];
            z_[i] = acc;
        }
        cached_ = true;
        Vec y(n);
        for (size_t i = 0; i < n; ++i) {
            y[i] = inverse ? x[i] * std::sqrt(z_[i]) : x[i] / std::sqrt(z_[i]);
            if (!std::isfinite(y[i]))
                throw NumericError(kind() + " produced a non-finite output at channel " +
                                   std::to_string(i));
        }
        return y;
    }

    Vec backward(const Vec& d_y) override {
        check_out_grad(d_y);
        require_cached(cached_);
        cached_ = false;
        // t_i = d_y_i · x_i · z_i^{-3/2} (fwd) or d_y_i · x_i · z_i^{-1/2} (inv);
        // shared by the beta, gamma and cross-channel input terms.
        Vec t(n);
        Vec d_x(n);
        for (size_t i = 0; i < n; ++i) {
            const double rz = 1.0 / std::sqrt(z_[i]);
            if (inverse) {
                t[i] = d_y[i] * x_[i] * rz;
                d_x[i] = d_y[i] / rz;  // d_y_i · sqrt(z_i)
                g_beta_raw[i] += 0.5 * t[i] * 2.0 * beta_raw[i];
            } else {
                t[i] = d_y[i] * x_[i] * rz * rz * rz;
                d_x[i] = d_y[i] * rz;
                g_beta_raw[i] += -0.5 * t[i] * 2.0 * beta_raw[i];
            }
        }
        const double sign = inverse ? 0.5 : -0.5;
        for (size_t i = 0; i < n; ++i) {
            const double* row = gamma_raw.data() + i * n;
            double* grow = g_gamma_raw.data() + i * n;
            const double ti = sign * t[i];
            for (size_t j = 0; j < n; ++j) {
                const double xj2 = x_[j] * x_[j];
                grow[j] += ti * xj2 * 2.0 * row[j];
                d_x[j] += ti * 2.0 * row[j] * row[j] * x_[j];
            }
        }
        return d_x;
    }

    void collect_params(std::vector<ParamView>& outp) override {
        outp.push_back({&beta_raw, &g_beta_raw});
        outp.push_back({&gamma_raw, &g_gamma_raw});
    }

  private:
    Vec x_, z_;
    bool cached_ = false;
};

// Dense→ReLU→Dense plus a shortcut: identity when widths match, otherwise a
// linear projection.
class ResidualBlock : public Layer {
  public:
    DenseLayer fc1, fc2;
    ReluLayer relu;
    std::unique_ptr<DenseLayer> proj;  // null when in == out

    ResidualBlock(size_t in_width, size_t out_width)
        : fc1(in_width, out_width), fc2(out_width, out_width), relu(out_width) {
        if (in_width != out_width) proj = std::make_unique<DenseLayer>(in_width, out_width);
    }

    ResidualBlock(size_t in_width, size_t out_width, Rng& rng)
        : fc1(in_width, out_width, rng), fc2(out_width, out_width, rng), relu(out_width) {
        if (in_width != out_width)
            proj = std::make_unique<DenseLayer>(in_width, out_width, rng);
    }

    size_t in_width() const override { return fc1.in_width(); }
    size_t out_width() const override { return fc2.out_width(); }
    std::string kind() const override { return "resblock"; }

    Vec forward(const Vec& x) override {
        check_in(x);
        Vec h = fc2.forward(relu.forward(fc1.forward(x)));
        Vec s = proj ? proj->forward(x) : x;
        cached_ = true;
        for (size_t i = 0; i < h.size(); ++i) h[i] += s[i];
        return h;
    }

    Vec backward(const Vec& d_y) override {
        check_out_grad(d_y);
        require_cached(cached_);
        cached_ = false;
        Vec d_x = fc1.backward(relu.backward(fc2.backward(d_y)));
        if (proj) {
            Vec d_s = proj->backward(d_y);
            for (size_t i = 0; i < d_x.size(); ++i) d_x[i] += d_s[i];
        } else {
            for (size_t i = 0; i < d_x.size(); ++i) d_x[i] += d_y[i];
        }
        return d_x;
    }

    void collect_params(std::vector<ParamView>& outp) override {
        fc1.collect_params(outp);
        fc2.collect_params(outp);
        if (proj) proj->collect_params(outp);
    }

  private:
    bool cached_ = false;
};

// A straight chain of layers sharing the forward/backward contract.
class Network {
  public:
    std::vector<std::unique_ptr<Layer>> layers;

    void add(std::unique_ptr<Layer> layer) {
        if (!layers.empty() && layers.back()->out_width() != layer->in_width())
            throw StateError("layer width mismatch: " +
                             std::to_string(layers.back()->out_width()) + " feeds " +
                             std::to_string(layer->in_width()));
        layers.push_back(std::move(layer));
    }

    size_t in_width() const {
        if (layers.empty()) throw StateError("empty network");
        return layers.front()->in_width();
    }
    size_t out_width() const {
        if (layers.empty()) throw StateError("empty network");
        return layers.back()->out_width();
    }

    Vec forward(Vec x) const {
        for (const auto& l : layers) x = l->forward(x);
        return x;
    }

    Vec backward(Vec d_out) const {
        for (auto it = layers.rbegin(); it != layers.rend(); ++it)
            d_out = (*it)->backward(d_out);
        return d_out;
    }

    void collect_params(std::vector<ParamView>& out) const {
        for (const auto& l : layers) l->collect_params(out);
    }

    std::vector<ParamView> params() const {
        std::vector<ParamView> out;
        collect_params(out);
        return out;
    }

    void zero_grad() const {
        for (ParamView p : params())
            std::fill(p.grad->begin(), p.grad->end(), 0.0);
    }

    size_t param_count() const {
        size_t n = 0;
        for (ParamView p : params()) n += p.value->size();
        return n;
    }
};

struct AdamConfig {
    double lr = 0.0001;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::vector<std::vector<double>> m;  // one slot per ParamView, in order
    std::vector<std::vector<double>> v;
    uint64_t step = 0;

    explicit AdamState(AdamConfig c = {}) : cfg(c) {}
};

// Standard bias-corrected Adam over an ordered parameter list. The list must
// keep the same shape call to call; the state is keyed by position.
inline void adam_step(const std::vector<ParamView>& params, AdamState& state) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].value->size(), 0.0);
            state.v[i].assign(params[i].value->size(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw StateError("adam state holds " + std::to_string(state.m.size()) +
                         " tensors, step got " + std::to_string(params.size()));
    ++state.step;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        std::vector<double>& val = *params[i].value;
        const std::vector<double>& grad = *params[i].grad;
        if (state.m[i].size() != val.size() || grad.size() != val.size())
            throw StateError("adam tensor " + std::to_string(i) + " changed shape");
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        for (size_t k = 0; k < val.size(); ++k) {
            const double g = grad[k];
            m[k] = b1 * m[k] + (1.0 - b1) * g;
            v[k] = b2 * v[k] + (1.0 - b2) * g * g;
            const double mhat = m[k] / corr1;
            const double vhat = v[k] / corr2;
            val[k] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
        }
    }
}

}  // namespace sfc
