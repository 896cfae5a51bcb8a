#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sfc/errors.hpp"

namespace sfc {

// A face descriptor is a flat 257-value vector: six coefficient segments
// concatenated in fixed order.
//
//   index    0       1         2           3          4            5
//   name     alpha   beta      delta       theta      l            gamma
//   meaning  shape   texture   expression  rotation   translation  illumination
//   width    80      80        64          3          3            27

inline constexpr int kSegmentCount = 6;
inline constexpr int kDescriptorDim = 257;
inline constexpr std::array<int, kSegmentCount> kSegmentDims = {80, 80, 64, 3, 3, 27};
inline constexpr std::array<int, kSegmentCount> kSegmentOffsets = {0, 80, 160, 224, 227, 230};
inline constexpr std::array<const char*, kSegmentCount> kSegmentNames = {
    "alpha", "beta", "delta", "theta", "l", "gamma"};

using Descriptor = std::vector<double>;

inline void check_descriptor(const Descriptor& w) {
    if (w.size() != kDescriptorDim)
        throw StateError("descriptor has " + std::to_string(w.size()) +
                         " values, expected " + std::to_string(kDescriptorDim));
    for (double v : w)
        if (!std::isfinite(v)) throw NumericError("descriptor contains a non-finite value");
}

struct SegmentMask {
    std::array<bool, kSegmentCount> flags{};

    static SegmentMask all() {
        SegmentMask m;
        m.flags.fill(true);
        return m;
    }
    // Segments the expression task consumes.
    static SegmentMask expression() { return of({2, 3, 4}); }
    // Segments the verification task consumes.
    static SegmentMask verification() { return of({0, 1}); }

    static SegmentMask of(std::initializer_list<int> segments) {
        SegmentMask m;
        for (int s : segments) m.flags[static_cast<size_t>(s)] = true;
        return m;
    }

    bool operator==(const SegmentMask&) const = default;

    bool any() const {
        for (bool f : flags)
            if (f) return true;
        return false;
    }

    int active_dims() const {
        int n = 0;
        for (int s = 0; s < kSegmentCount; ++s)
            if (flags[static_cast<size_t>(s)]) n += kSegmentDims[static_cast<size_t>(s)];
        return n;
    }

    uint8_t to_byte() const {
        uint8_t b = 0;
        for (int s = 0; s < kSegmentCount; ++s)
            if (flags[static_cast<size_t>(s)]) b |= static_cast<uint8_t>(1u << s);
        return b;
    }

    static SegmentMask from_byte(uint8_t b) {
        if (b & 0xC0) throw DataError("segment mask byte has reserved bits 6-7 set");
        if ((b & 0x3F) == 0) throw DataError("segment mask byte has no segments set");
        SegmentMask m;
        for (int s = 0; s < kSegmentCount; ++s)
            m.flags[static_cast<size_t>(s)] = (b >> s) & 1u;
        return m;
    }

    // Parses "delta,theta,l" style comma-separated segment names.
    static SegmentMask parse(const std::string& spec) {
        SegmentMask m;
        size_t start = 0;
        while (start <= spec.size()) {
            size_t end = spec.find(',', start);
            if (end == std::string::npos) end = spec.size();
            const std::string name = spec.substr(start, end - start);
            bool known = false;
            for (int s = 0; s < kSegmentCount; ++s) {
                if (name == kSegmentNames[static_cast<size_t>(s)]) {
                    m.flags[static_cast<size_t>(s)] = true;
                    known = true;
                    break;
                }
            }
            if (!known) throw ConfigError("unknown segment name: '" + name + "'");
            if (end == spec.size()) break;
            start = end + 1;
        }
        if (!m.any()) throw ConfigError("segment mask selects no segments");
        return m;
    }

    std::string to_string() const {
        std::string s;
        for (int i = 0; i < kSegmentCount; ++i) {
            if (!flags[static_cast<size_t>(i)]) continue;
            if (!s.empty()) s += ',';
            s += kSegmentNames[static_cast<size_t>(i)];
        }
        return s;
    }
};

struct DescriptorSegments {
    std::vector<double> alpha, beta, delta, theta, l, gamma;
};

inline DescriptorSegments split_descriptor(const Descriptor& w) {
    check_descriptor(w);
    DescriptorSegments s;
    std::vector<double>* out[kSegmentCount] = {&s.alpha, &s.beta, &s.delta,
                                               &s.theta, &s.l,    &s.gamma};
    for (int i = 0; i < kSegmentCount; ++i) {
        const auto off = static_cast<size_t>(kSegmentOffsets[static_cast<size_t>(i)]);
        const auto dim = static_cast<size_t>(kSegmentDims[static_cast<size_t>(i)]);
        out[i]->assign(w.begin() + static_cast<long>(off),
                       w.begin() + static_cast<long>(off + dim));
    }
    return s;
}

inline Descriptor assemble_descriptor(const DescriptorSegments& s) {
    const std::vector<double>* in[kSegmentCount] = {&s.alpha, &s.beta, &s.delta,
                                                    &s.theta, &s.l,    &s.gamma};
    for (int i = 0; i < kSegmentCount; ++i) {
        const auto want = static_cast<size_t>(kSegmentDims[static_cast<size_t>(i)]);
        if (in[i]->size() != want)
            throw StateError(std::string("segment ") + kSegmentNames[static_cast<size_t>(i)] +
                             " has " + std::to_string(in[i]->size()) + " values, expected " +
                             std::to_string(want));
    }
    Descriptor w;
    w.reserve(kDescriptorDim);
    for (int i = 0; i < kSegmentCount; ++i) w.insert(w.end(), in[i]->begin(), in[i]->end());
    return w;
}

// Full-size copy with inactive segments forced to 0.0.
inline Descriptor zero_pad_portion(const Descriptor& w, const SegmentMask& mask) {
    check_descriptor(w);
    if (!mask.any()) throw StateError("segment mask selects no segments");
    Descriptor out(kDescriptorDim, 0.0);
    for (int s = 0; s < kSegmentCount; ++s) {
        if (!mask.flags[static_cast<size_t>(s)]) continue;
        const int off = kSegmentOffsets[static_cast<size_t>(s)];
        const int dim = kSegmentDims[static_cast<size_t>(s)];
        for (int d = 0; d < dim; ++d)
            out[static_cast<size_t>(off + d)] = w[static_cast<size_t>(off + d)];
    }
    return out;
}

// Dense vector holding only the active segments, in canonical order.
inline std::vector<double> project_portion(const Descriptor& w, const SegmentMask& mask) {
    check_descriptor(w);
    if (!mask.any()) throw StateError("segment mask selects no segments");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(mask.active_dims()));
    for (int s = 0; s < kSegmentCount; ++s) {
        if (!mask.flags[static_cast<size_t>(s)]) continue;
        const int off = kSegmentOffsets[static_cast<size_t>(s)];
        const int dim = kSegmentDims[static_cast<size_t>(s)];
        for (int d = 0; d < dim; ++d) out.push_back(w[static_cast<size_t>(off + d)]);
    }
    return out;
}

// Inverse of project_portion: scatters active values back into a zero-filled
// 257-vector.
inline Descriptor expand_portion(const std::vector<double>& active, const SegmentMask& mask) {
    if (active.size() != static_cast<size_t>(mask.active_dims()))
        throw StateError("active vector has " + std::to_string(active.size()) +
                         " values, mask expects " + std::to_string(mask.active_dims()));
    Descriptor out(kDescriptorDim, 0.0);
    size_t k = 0;
    for (int s = 0; s < kSegmentCount; ++s) {
        if (!mask.flags[static_cast<size_t>(s)]) continue;
        const int off = kSegmentOffsets[static_cast<size_t>(s)];
        const int dim = kSegmentDims[static_cast<size_t>(s)];
        for (int d = 0; d < dim; ++d) out[static_cast<size_t>(off + d)] = active[k++];
    }
    return out;
}

}  // namespace sfc
