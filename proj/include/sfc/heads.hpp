#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sfc/codec.hpp"

namespace sfc {

enum class HeadKind : uint8_t { kExpression, kVerification };

inline constexpr size_t kVerificationDim = 512;
inline constexpr uint64_t kOracleSeed = 0xfacadeull;

// Both heads share one shape: input projection, three residual blocks of
// width 256, output projection. The expression head scores E classes from
// (δ, θ, l); the verification head embeds (α, β) into R^512.
struct HeadModel {
    HeadKind head_kind = HeadKind::kExpression;
    Network net;
    uint64_t seed = 0;
    uint32_t epochs_run = 0;

    SegmentMask mask() const {
        return head_kind == HeadKind::kExpression ? SegmentMask::expression()
                                                  : SegmentMask::verification();
    }
    size_t out_width() const { return net.out_width(); }
};

inline HeadModel make_head(HeadKind kind, size_t out_width, uint64_t seed,
                           size_t hidden = 256) {
    HeadModel h;
    h.head_kind = kind;
    h.seed = seed;
    const size_t in = static_cast<size_t>(h.mask().active_dims());
    Rng rng(seed);
    h.net.add(std::make_unique<DenseLayer>(in, hidden, rng));
    h.net.add(std::make_unique<ReluLayer>(hidden));
    h.net.add(std::make_unique<ResidualBlock>(hidden, hidden, rng));
    h.net.add(std::make_unique<ResidualBlock>(hidden, hidden, rng));
    h.net.add(std::make_unique<ResidualBlock>(hidden, hidden, rng));
    h.net.add(std::make_unique<DenseLayer>(hidden, out_width, rng));
    return h;
}

// Heads read only their mandated segments of the full descriptor.
inline Vec head_infer(const HeadModel& head, const Descriptor& w) {
    check_descriptor(w);
    return head.net.forward(project_portion(w, head.mask()));
}

inline Vec expression_infer(const HeadModel& head, const Descriptor& w) {
    if (head.head_kind != HeadKind::kExpression)
        throw StateError("expression_infer called on a verification head");
    return head_infer(head, w);
}

inline Vec verification_embed(const HeadModel& head, const Descriptor& w) {
    if (head.head_kind != HeadKind::kVerification)
        throw StateError("verification_embed called on an expression head");
    return head_infer(head, w);
}

inline size_t argmax(const Vec& v) {
    if (v.empty()) throw StateError("argmax of empty vector");
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

inline Vec softmax(const Vec& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    Vec p(scores.size());
    double z = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - top);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

struct TrainedHead {
    HeadModel model;
    std::vector<double> trace;  // mean loss per epoch
};

namespace detail {

// Shared SGD scaffolding for both heads: per-sample loss_grad fills d_scores
// and returns the loss value.
template <typename LossGrad>
TrainedHead train_head(HeadKind kind, size_t out_width, const DescriptorCorpus& corpus,
                       const TrainConfig& cfg, size_t hidden, LossGrad&& loss_grad) {
    cfg.validate();
    if (corpus.vectors.empty()) throw ConfigError("training corpus is empty");
    TrainedHead result;
    result.model = make_head(kind, out_width, cfg.seed, hidden);
    HeadModel& head = result.model;

    std::vector<Vec> rows;
    rows.reserve(corpus.vectors.size());
    for (const Descriptor& w : corpus.vectors) {
        check_descriptor(w);
        rows.push_back(project_portion(w, head.mask()));
    }

    const std::vector<ParamView> params = head.net.params();
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    AdamState adam(cfg.adam());
    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch) {
            const size_t stop = std::min(order.size(), start + cfg.batch);
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            head.net.zero_grad();
            double batch_loss = 0.0;
            for (size_t s = start; s < stop; ++s) {
                const size_t idx = order[s];
                const Vec scores = head.net.forward(rows[idx]);
                Vec d_scores(scores.size(), 0.0);
                const double loss = loss_grad(idx, scores, d_scores);
                batch_loss += loss;
                epoch_loss += loss;
                for (double& g : d_scores) g *= inv_b;
                head.net.backward(d_scores);
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("non-finite head loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / cfg.batch));
            adam_step(params, adam);
        }
        result.trace.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    head.epochs_run = static_cast<uint32_t>(cfg.epochs);
    return result;
}

}  // namespace detail

// Softmax cross-entropy over E classes; epochs default 30 at the call site.
inline TrainedHead train_expression(const DescriptorCorpus& corpus, const TrainConfig& cfg,
                                    size_t class_count, size_t hidden = 256) {
    if (!corpus.labels)
        throw ConfigError("expression training needs a labeled corpus");
    for (uint16_t lbl : *corpus.labels)
        if (lbl >= class_count)
            throw ConfigError("label " + std::to_string(lbl) + " outside class count " +
                              std::to_string(class_count));
    const std::vector<uint16_t>& labels = *corpus.labels;
    return detail::train_head(
        HeadKind::kExpression, class_count, corpus, cfg, hidden,
        [&](size_t idx, const Vec& scores, Vec& d_scores) {
            const Vec p = softmax(scores);
            const size_t label = labels[idx];
            for (size_t k = 0; k < p.size(); ++k)
                d_scores[k] = p[k] - (k == label ? 1.0 : 0.0);
            const double q = p[label] < 1e-300 ? 1e-300 : p[label];
            return -std::log(q);
        });
}

// MSE regression against per-item target embeddings.
inline TrainedHead train_verification(const DescriptorCorpus& corpus,
                                      const std::vector<Vec>& targets, const TrainConfig& cfg,
                                      size_t embed_dim = kVerificationDim,
                                      size_t hidden = 256) {
    if (targets.size() != corpus.vectors.size())
        throw ConfigError("verification targets: " + std::to_string(targets.size()) +
                          " embeddings for " + std::to_string(corpus.vectors.size()) +
                          " descriptors");
    for (const Vec& t : targets)
        if (t.size() != embed_dim)
            throw ConfigError("verification target width " + std::to_string(t.size()) +
                              ", expected " + std::to_string(embed_dim));
    return detail::train_head(
        HeadKind::kVerification, embed_dim, corpus, cfg, hidden,
        [&](size_t idx, const Vec& scores, Vec& d_scores) {
            const Vec& t = targets[idx];
            double loss = 0.0;
            const double inv_k = 1.0 / static_cast<double>(scores.size());
            for (size_t k = 0; k < scores.size(); ++k) {
                const double d = scores[k] - t[k];
                loss += d * d;
                d_scores[k] = 2.0 * d * inv_k;
            }
            return loss * inv_k;
        });
}

inline Vec l2_normalize(const Vec& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const double n = std::sqrt(n2);
    if (n == 0.0) return v;
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

// Stand-in for the external embedding network: one fixed seeded linear map
// R^160 -> R^512 applied to each identity's (α, β) class mean, L2-normalized.
// Every sample of an identity shares its identity's target.
inline std::vector<Vec> oracle_embeddings(const DescriptorCorpus& corpus,
                                          size_t embed_dim = kVerificationDim,
                                          uint64_t map_seed = kOracleSeed) {
    if (!corpus.labels) throw ConfigError("embedding oracle needs a labeled corpus");
    const std::vector<uint16_t>& labels = *corpus.labels;
    uint16_t max_label = 0;
    for (uint16_t lbl : labels) max_label = std::max(max_label, lbl);
    const size_t classes = static_cast<size_t>(max_label) + 1;
    const SegmentMask mask = SegmentMask::verification();
    const size_t in = static_cast<size_t>(mask.active_dims());

    std::vector<Vec> means(classes, Vec(in, 0.0));
    std::vector<size_t> counts(classes, 0);
    for (size_t i = 0; i < corpus.vectors.size(); ++i) {
        const Vec proj = project_portion(corpus.vectors[i], mask);
        Vec& m = means[labels[i]];
        for (size_t k = 0; k < in; ++k) m[k] += proj[k];
        ++counts[labels[i]];
    }
    for (size_t c = 0; c < classes; ++c) {
        if (counts[c] == 0) continue;
        for (double& v : means[c]) v /= static_cast<double>(counts[c]);
    }

    Rng rng(map_seed);
    std::vector<double> map(embed_dim * in);
    for (double& v : map) v = rng.normal();

    std::vector<Vec> identity_embed(classes);
    for (size_t c = 0; c < classes; ++c) {
        Vec e(embed_dim, 0.0);
        for (size_t r = 0; r < embed_dim; ++r) {
            const double* row = map.data() + r * in;
            double acc = 0.0;
            for (size_t k = 0; k < in; ++k) acc += row[k] * means[c][k];
            e[r] = acc;
        }
        identity_embed[c] = l2_normalize(e);
    }

    std::vector<Vec> targets;
    targets.reserve(corpus.vectors.size());
    for (uint16_t lbl : labels) targets.push_back(identity_embed[lbl]);
    return targets;
}

struct PairExample {
    uint32_t a = 0;
    uint32_t b = 0;
    bool same = false;

    bool operator==(const PairExample&) const = default;
};

using VerificationPairSet = std::vector<PairExample>;

inline void check_pairs(const VerificationPairSet& pairs, size_t item_count) {
    if (pairs.empty()) throw ConfigError("pair set is empty");
    bool any_same = false, any_diff = false;
    for (const PairExample& p : pairs) {
        if (p.a >= item_count || p.b >= item_count)
            throw ConfigError("pair index out of range: (" + std::to_string(p.a) + ", " +
                              std::to_string(p.b) + ") with " + std::to_string(item_count) +
                              " items");
        (p.same ? any_same : any_diff) = true;
    }
    if (!any_same || !any_diff)
        throw ConfigError("pair set must contain both same- and different-identity pairs");
}

// Balanced pair sampling from corpus labels.
inline VerificationPairSet make_pairs(const std::vector<uint16_t>& labels, size_t count,
                                      uint64_t seed) {
    if (count == 0) throw ConfigError("pair count must be positive");
    std::vector<std::vector<uint32_t>> by_class;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= by_class.size()) by_class.resize(labels[i] + 1);
        by_class[labels[i]].push_back(static_cast<uint32_t>(i));
    }
    std::vector<uint32_t> rich;  // classes with ≥ 2 members
    for (uint32_t c = 0; c < by_class.size(); ++c)
        if (by_class[c].size() >= 2) rich.push_back(c);
    const size_t class_total =
        static_cast<size_t>(std::count_if(by_class.begin(), by_class.end(),
                                          [](const auto& v) { return !v.empty(); }));
    if (rich.empty() || class_total < 2)
        throw ConfigError("pair sampling needs a class with two members and two classes");

    Rng rng(seed);
    VerificationPairSet pairs;
    pairs.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        PairExample p;
        p.same = (i % 2 == 0);
        if (p.same) {
            const auto& members = by_class[rich[rng.below(rich.size())]];
            p.a = members[rng.below(members.size())];
            do {
                p.b = members[rng.below(members.size())];
            } while (p.b == p.a);
        } else {
            do {
                p.a = static_cast<uint32_t>(rng.below(labels.size()));
                p.b = static_cast<uint32_t>(rng.below(labels.size()));
            } while (labels[p.a] == labels[p.b]);
        }
        pairs.push_back(p);
    }
    return pairs;
}

struct ThresholdResult {
    double tau = 0.0;
    double accuracy = 0.0;
};

// Exhaustive scan over midpoints of the sorted pair distances (plus the two
// all-one-side sentinels), on L2-normalized embeddings. Predict "same" when
// distance < τ; ties break toward the smaller τ.
inline ThresholdResult find_threshold(const VerificationPairSet& pairs,
                                      const std::vector<Vec>& embeddings) {
    check_pairs(pairs, embeddings.size());
    std::vector<Vec> unit;
    unit.reserve(embeddings.size());
    for (const Vec& e : embeddings) unit.push_back(l2_normalize(e));

    std::vector<double> dist(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        const Vec& x = unit[pairs[i].a];
        const Vec& y = unit[pairs[i].b];
        double d2 = 0.0;
        for (size_t k = 0; k < x.size(); ++k) {
            const double d = x[k] - y[k];
            d2 += d * d;
        }
        dist[i] = std::sqrt(d2);
    }

    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> candidates;
    candidates.push_back(sorted.front() - 1.0 < 0.0 ? 0.0 : sorted.front() - 1.0);
    for (size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i] < sorted[i + 1])
            candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    candidates.push_back(sorted.back() + 1.0);

    ThresholdResult best;
    best.tau = candidates.front();
    best.accuracy = -1.0;
    for (double tau : candidates) {
        size_t correct = 0;
        for (size_t i = 0; i < pairs.size(); ++i)
            if ((dist[i] < tau) == pairs[i].same) ++correct;
        const double acc = static_cast<double>(correct) / static_cast<double>(pairs.size());
        if (acc > best.accuracy) {
            best.accuracy = acc;
            best.tau = tau;
        }
    }
    return best;
}

// Pair-set CSV: `index_a,index_b,same` header, then one pair per row.
inline std::string pairs_to_csv(const VerificationPairSet& pairs) {
    std::string out = "index_a,index_b,same\n";
    for (const PairExample& p : pairs) {
        out += std::to_string(p.a);
        out += ',';
        out += std::to_string(p.b);
        out += ',';
        out += p.same ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline VerificationPairSet pairs_from_csv(const std::string& text,
                                          const std::string& what = "pair csv") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "index_a,index_b,same")
        throw DataError(what + ": missing 'index_a,index_b,same' header");
    VerificationPairSet pairs;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        PairExample p;
        unsigned long a = 0, b = 0;
        int same = -1;
        char extra = 0;
        if (std::sscanf(line.c_str(), "%lu,%lu,%d%c", &a, &b, &same, &extra) != 3 ||
            (same != 0 && same != 1))
            throw DataError(what + ": malformed row " + std::to_string(row) + ": " + line);
        p.a = static_cast<uint32_t>(a);
        p.b = static_cast<uint32_t>(b);
        p.same = same == 1;
        pairs.push_back(p);
    }
    return pairs;
}

inline void save_pairs(const VerificationPairSet& pairs, const std::string& path) {
    const std::string csv = pairs_to_csv(pairs);
    write_file_atomic(path, std::vector<uint8_t>(csv.begin(), csv.end()));
}

inline VerificationPairSet load_pairs(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    return pairs_from_csv(std::string(bytes.begin(), bytes.end()), path);
}

struct RaPoint {
    double avg_bits = 0.0;
    double accuracy = 0.0;
    double tau = 0.0;  // verification only
};

// Compress → decompress → head inference; codec == nullptr bypasses coding
// (clean descriptors, zero bits).
inline std::vector<Descriptor> reconstruct_corpus(const CodecModel* codec,
                                                  const DescriptorCorpus& corpus,
                                                  double* avg_bits_out) {
    double bits = 0.0;
    std::vector<Descriptor> recon;
    recon.reserve(corpus.vectors.size());
    for (const Descriptor& w : corpus.vectors) {
        if (codec) {
            const Bitstream bs = compress(*codec, w);
            bits += static_cast<double>(bs.total_bits());
            recon.push_back(decompress(*codec, bs));
        } else {
            recon.push_back(w);
        }
    }
    if (avg_bits_out)
        *avg_bits_out = corpus.vectors.empty()
                            ? 0.0
                            : bits / static_cast<double>(corpus.vectors.size());
    return recon;
}

inline RaPoint evaluate_expression_ra(const CodecModel* codec, const HeadModel& head,
                                      const DescriptorCorpus& corpus) {
    if (!corpus.labels) throw ConfigError("expression evaluation needs labels");
    if (corpus.vectors.empty()) throw ConfigError("evaluation corpus is empty");
    RaPoint pt;
    const std::vector<Descriptor> recon = reconstruct_corpus(codec, corpus, &pt.avg_bits);
    size_t correct = 0;
    for (size_t i = 0; i < recon.size(); ++i)
        if (argmax(expression_infer(head, recon[i])) == (*corpus.labels)[i]) ++correct;
    pt.accuracy = static_cast<double>(correct) / static_cast<double>(recon.size());
    return pt;
}

inline RaPoint evaluate_verification_ra(const CodecModel* codec, const HeadModel& head,
                                        const DescriptorCorpus& corpus,
                                        const VerificationPairSet& pairs) {
    if (corpus.vectors.empty()) throw ConfigError("evaluation corpus is empty");
    RaPoint pt;
    const std::vector<Descriptor> recon = reconstruct_corpus(codec, corpus, &pt.avg_bits);
    std::vector<Vec> embeddings;
    embeddings.reserve(recon.size());
    for (const Descriptor& w : recon) embeddings.push_back(verification_embed(head, w));
    const ThresholdResult th = find_threshold(pairs, embeddings);
    pt.accuracy = th.accuracy;
    pt.tau = th.tau;
    return pt;
}

inline std::vector<uint8_t> head_to_bytes(const HeadModel& head) {
    ByteWriter w;
    write_checkpoint_header(w, head.head_kind == HeadKind::kExpression ? "expr" : "verf");
    w.u32(static_cast<uint32_t>(head.net.in_width()));
    w.u32(static_cast<uint32_t>(head.net.out_width()));
    w.u64(head.seed);
    w.u32(head.epochs_run);
    write_network(w, head.net);
    return w.take();
}

inline HeadModel head_from_bytes(const std::vector<uint8_t>& bytes,
                                 const std::string& what = "head checkpoint") {
    ByteReader r(bytes, what);
    const std::string kind = read_checkpoint_header(r, what);
    HeadModel h;
    if (kind == "expr")
        h.head_kind = HeadKind::kExpression;
    else if (kind == "verf")
        h.head_kind = HeadKind::kVerification;
    else
        throw DataError(what + ": checkpoint kind '" + kind + "', expected a head");
    const uint32_t in = r.u32();
    const uint32_t out = r.u32();
    h.seed = r.u64();
    h.epochs_run = r.u32();
    h.net = read_network(r, what + " network");
    if (r.remaining() != 0) throw DataError(what + ": trailing bytes after network");
    if (h.net.in_width() != in || h.net.out_width() != out)
        throw DataError(what + ": network widths disagree with header");
    if (static_cast<int>(in) != h.mask().active_dims())
        throw DataError(what + ": input width " + std::to_string(in) +
                        " does not match the " + (kind == "expr" ? "expression" : "verification") +
                        " segments");
    return h;
}

inline void save_head(const HeadModel& head, const std::string& path) {
    write_file_atomic(path, head_to_bytes(head));
}

inline HeadModel load_head(const std::string& path) {
    return head_from_bytes(read_file(path), path);
}

}  // namespace sfc
