// sfc: semantic face descriptor codec CLI.
//
// Subcommands: synth, train-codec, train-expr, train-verif, compress,
// decompress, eval-ra. Exit codes: 0 ok, 2 usage/validation, 3 data/format,
// 4 numerical failure. Progress goes to stderr; machine-readable output goes
// to stdout or --out. All randomness flows from --seed.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfc/bitstream.hpp"
#include "sfc/codec.hpp"
#include "sfc/corpus.hpp"
#include "sfc/descriptor.hpp"
#include "sfc/errors.hpp"
#include "sfc/heads.hpp"

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        sfc::write_file_atomic(out_path, std::vector<uint8_t>(text.begin(), text.end()));
    }
}

struct SynthArgs {
    std::string task = "expression";
    int classes = 8;
    int per_class = 200;
    double mean_scale = 1.0;
    double noise_scale = 0.1;
    uint64_t seed = 1;
    std::string out;
};

void run_synth(const SynthArgs& a) {
    sfc::SyntheticConfig cfg;
    if (a.task == "expression")
        cfg.task = sfc::SyntheticTask::expression;
    else if (a.task == "identity")
        cfg.task = sfc::SyntheticTask::identity;
    else
        throw sfc::ConfigError("--task must be 'expression' or 'identity', got '" + a.task + "'");
    cfg.class_count = a.classes;
    cfg.samples_per_class = a.per_class;
    cfg.class_mean_scale = a.mean_scale;
    cfg.noise_scale = a.noise_scale;
    cfg.seed = a.seed;
    const sfc::DescriptorCorpus corpus = sfc::generate_synthetic_corpus(cfg);
    sfc::save_corpus(corpus, a.out);
    std::printf("count=%zu classes=%d seed=%llu\n", corpus.size(), a.classes,
                static_cast<unsigned long long>(a.seed));
}

struct TrainCodecArgs {
    std::string corpus;
    std::string out;
    std::string mask = "alpha,beta,delta,theta,l,gamma";
    double lambda_r = 0.001;
    double lambda_mae = 1.0;
    size_t epochs = 40;
    size_t batch = 64;
    double lr = 0.0001;
    uint64_t seed = 1;
};

void run_train_codec(const TrainCodecArgs& a) {
    const sfc::SegmentMask mask = sfc::SegmentMask::parse(a.mask);
    const sfc::DescriptorCorpus corpus = sfc::load_corpus(a.corpus);
    sfc::TrainConfig cfg;
    cfg.lr = a.lr;
    cfg.batch = a.batch;
    cfg.epochs = a.epochs;
    cfg.lambda_mae = a.lambda_mae;
    cfg.lambda_r = a.lambda_r;
    cfg.seed = a.seed;
    std::fprintf(stderr, "training codec: mask=%s items=%zu epochs=%zu lambda_r=%s\n",
                 mask.to_string().c_str(), corpus.size(), cfg.epochs, fmt_g(cfg.lambda_r).c_str());
    const sfc::TrainedCodec trained = sfc::train_codec(corpus, cfg, mask);
    std::printf("epoch,loss_total,loss_mae,loss_rate\n");
    for (size_t e = 0; e < trained.trace.size(); ++e) {
        const sfc::LossParts& p = trained.trace[e];
        std::printf("%zu,%s,%s,%s\n", e, fmt_g(p.total).c_str(), fmt_g(p.mae).c_str(),
                    fmt_g(p.rate).c_str());
    }
    sfc::save_codec(trained.model, a.out);
}

struct TrainHeadArgs {
    std::string corpus;
    std::string out;
    size_t classes = 8;
    size_t epochs = 30;
    size_t batch = 64;
    double lr = 0.0001;
    uint64_t seed = 1;
};

void run_train_head(const TrainHeadArgs& a, bool expression) {
    const sfc::DescriptorCorpus corpus = sfc::load_corpus(a.corpus);
    sfc::TrainConfig cfg;
    cfg.lr = a.lr;
    cfg.batch = a.batch;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    std::fprintf(stderr, "training %s head: items=%zu epochs=%zu\n",
                 expression ? "expression" : "verification", corpus.size(), cfg.epochs);
    sfc::TrainedHead trained;
    if (expression) {
        trained = sfc::train_expression(corpus, cfg, a.classes);
    } else {
        const std::vector<sfc::Vec> targets = sfc::oracle_embeddings(corpus);
        trained = sfc::train_verification(corpus, targets, cfg);
    }
    std::printf("epoch,loss\n");
    for (size_t e = 0; e < trained.trace.size(); ++e)
        std::printf("%zu,%s\n", e, fmt_g(trained.trace[e]).c_str());
    sfc::save_head(trained.model, a.out);
}

struct CompressArgs {
    std::string corpus;
    std::string model;
    std::string out;
    bool stats = false;
};

void run_compress(const CompressArgs& a) {
    const sfc::CodecModel model = sfc::load_codec(a.model);
    const sfc::DescriptorCorpus corpus = sfc::load_corpus(a.corpus);
    std::vector<sfc::Bitstream> streams;
    streams.reserve(corpus.size());
    double bits = 0.0;
    for (const sfc::Descriptor& w : corpus.vectors) {
        streams.push_back(sfc::compress(model, w));
        bits += static_cast<double>(streams.back().total_bits());
    }
    sfc::save_archive(streams, a.out);
    if (a.stats && !streams.empty())
        std::printf("avg_bits=%s\n", fmt_g(bits / static_cast<double>(streams.size())).c_str());
}

struct DecompressArgs {
    std::string archive;
    std::string model;
    std::string out;
};

void run_decompress(const DecompressArgs& a) {
    const sfc::CodecModel model = sfc::load_codec(a.model);
    const std::vector<sfc::Bitstream> streams = sfc::load_archive(a.archive);
    sfc::DescriptorCorpus recon;
    recon.vectors.reserve(streams.size());
    for (const sfc::Bitstream& bs : streams) recon.vectors.push_back(sfc::decompress(model, bs));
    sfc::save_corpus(recon, a.out);
    std::fprintf(stderr, "decompressed %zu descriptors\n", streams.size());
}

struct EvalArgs {
    std::string expr_corpus, expr_head;
    std::string verif_corpus, verif_head;
    std::vector<std::string> full_codecs;
    std::vector<std::string> expr_codecs;
    std::vector<std::string> verif_codecs;
    std::string pairs_path;
    size_t pair_count = 1000;
    uint64_t seed = 1;
    std::string out;
    std::string rd_out;
};

sfc::DescriptorCorpus zero_padded(const sfc::DescriptorCorpus& corpus,
                                  const sfc::SegmentMask& keep) {
    sfc::DescriptorCorpus padded;
    padded.labels = corpus.labels;
    padded.vectors.reserve(corpus.size());
    for (const sfc::Descriptor& w : corpus.vectors)
        padded.vectors.push_back(sfc::zero_pad_portion(w, keep));
    return padded;
}

void run_eval_ra(const EvalArgs& a) {
    const bool do_expr = !a.expr_corpus.empty() || !a.expr_head.empty();
    const bool do_verif = !a.verif_corpus.empty() || !a.verif_head.empty();
    if (do_expr && (a.expr_corpus.empty() || a.expr_head.empty()))
        throw sfc::ConfigError("expression evaluation needs both --expr-corpus and --expr-head");
    if (do_verif && (a.verif_corpus.empty() || a.verif_head.empty()))
        throw sfc::ConfigError("verification evaluation needs both --verif-corpus and --verif-head");
    if (!do_expr && !do_verif)
        throw sfc::ConfigError("nothing to evaluate: give --expr-corpus/--expr-head and/or "
                               "--verif-corpus/--verif-head");
    if (a.full_codecs.empty() && a.expr_codecs.empty() && a.verif_codecs.empty())
        throw sfc::ConfigError("no codec checkpoints given (--codec/--expr-codec/--verif-codec)");

    std::vector<sfc::CodecModel> full;
    for (const std::string& path : a.full_codecs) {
        full.push_back(sfc::load_codec(path));
        if (!(full.back().mask == sfc::SegmentMask::all()))
            throw sfc::DataError(path + ": --codec expects a full-mask codec, got mask '" +
                                 full.back().mask.to_string() + "'");
    }

    std::string ra = "task,mode,lambda_r,avg_bits,accuracy\n";
    const auto add_row = [&ra](const char* task, const char* mode, double lambda_r,
                               const sfc::RaPoint& pt) {
        ra += task;
        ra += ',';
        ra += mode;
        ra += ',';
        ra += fmt_g(lambda_r) + ',' + fmt_g(pt.avg_bits) + ',' + fmt_g(pt.accuracy) + '\n';
    };

    if (do_expr) {
        const sfc::DescriptorCorpus corpus = sfc::load_corpus(a.expr_corpus);
        const sfc::HeadModel head = sfc::load_head(a.expr_head);
        if (head.head_kind != sfc::HeadKind::kExpression)
            throw sfc::DataError(a.expr_head + ": not an expression head");
        const sfc::DescriptorCorpus padded = zero_padded(corpus, sfc::SegmentMask::expression());
        for (const sfc::CodecModel& codec : full) {
            add_row("expression", "full", codec.lambda_r,
                    sfc::evaluate_expression_ra(&codec, head, corpus));
            add_row("expression", "portion-zeropad", codec.lambda_r,
                    sfc::evaluate_expression_ra(&codec, head, padded));
        }
        for (const std::string& path : a.expr_codecs) {
            const sfc::CodecModel codec = sfc::load_codec(path);
            if (!(codec.mask == sfc::SegmentMask::expression()))
                throw sfc::DataError(path + ": --expr-codec expects mask 'delta,theta,l', got '" +
                                     codec.mask.to_string() + "'");
            add_row("expression", "portion-retrained", codec.lambda_r,
                    sfc::evaluate_expression_ra(&codec, head, corpus));
        }
    }

    if (do_verif) {
        const sfc::DescriptorCorpus corpus = sfc::load_corpus(a.verif_corpus);
        const sfc::HeadModel head = sfc::load_head(a.verif_head);
        if (head.head_kind != sfc::HeadKind::kVerification)
            throw sfc::DataError(a.verif_head + ": not a verification head");
        sfc::VerificationPairSet pairs;
        if (!a.pairs_path.empty()) {
            pairs = sfc::load_pairs(a.pairs_path);
        } else {
            if (!corpus.labels)
                throw sfc::ConfigError("--verif-corpus has no labels; give --pairs instead");
            pairs = sfc::make_pairs(*corpus.labels, a.pair_count, a.seed);
        }
        sfc::check_pairs(pairs, corpus.size());
        const sfc::DescriptorCorpus padded = zero_padded(corpus, sfc::SegmentMask::verification());
        for (const sfc::CodecModel& codec : full) {
            add_row("verification", "full", codec.lambda_r,
                    sfc::evaluate_verification_ra(&codec, head, corpus, pairs));
            add_row("verification", "portion-zeropad", codec.lambda_r,
                    sfc::evaluate_verification_ra(&codec, head, padded, pairs));
        }
        for (const std::string& path : a.verif_codecs) {
            const sfc::CodecModel codec = sfc::load_codec(path);
            if (!(codec.mask == sfc::SegmentMask::verification()))
                throw sfc::DataError(path + ": --verif-codec expects mask 'alpha,beta', got '" +
                                     codec.mask.to_string() + "'");
            add_row("verification", "portion-retrained", codec.lambda_r,
                    sfc::evaluate_verification_ra(&codec, head, corpus, pairs));
        }
    }

    emit(a.out, ra);

    if (!full.empty()) {
        const std::string rd_corpus_path = do_expr ? a.expr_corpus : a.verif_corpus;
        const sfc::DescriptorCorpus rd_corpus = sfc::load_corpus(rd_corpus_path);
        std::string rd = "lambda_r,avg_bits,mae\n";
        for (const sfc::CodecModel& codec : full) {
            const sfc::RdPoint pt = sfc::evaluate_rd(codec, rd_corpus);
            rd += fmt_g(codec.lambda_r) + ',' + fmt_g(pt.avg_bits) + ',' + fmt_g(pt.mae) + '\n';
        }
        std::string rd_path = a.rd_out;
        if (rd_path.empty() && !a.out.empty()) rd_path = a.out + ".rd.csv";
        emit(rd_path, rd);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic face descriptor codec"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* s = app.add_subcommand("synth", "generate a synthetic descriptor corpus");
    s->add_option("--task", synth.task, "expression|identity")->capture_default_str();
    s->add_option("--classes", synth.classes, "class count")->capture_default_str();
    s->add_option("--per-class", synth.per_class, "samples per class")->capture_default_str();
    s->add_option("--mean-scale", synth.mean_scale, "class mean scale")->capture_default_str();
    s->add_option("--noise-scale", synth.noise_scale, "within-class noise scale")
        ->capture_default_str();
    s->add_option("--seed", synth.seed, "rng seed")->capture_default_str();
    s->add_option("--out", synth.out, "output .sfd path")->required();
    s->callback([&synth] { run_synth(synth); });

    TrainCodecArgs tc;
    CLI::App* c = app.add_subcommand("train-codec", "train a descriptor codec");
    c->add_option("--corpus", tc.corpus, "training corpus (.sfd)")->required();
    c->add_option("--out", tc.out, "output checkpoint (.sfm)")->required();
    c->add_option("--mask", tc.mask, "active segments")->capture_default_str();
    c->add_option("--lambda-r", tc.lambda_r, "rate weight")->capture_default_str();
    c->add_option("--lambda-mae", tc.lambda_mae, "distortion weight")->capture_default_str();
    c->add_option("--epochs", tc.epochs, "training epochs")->capture_default_str();
    c->add_option("--batch", tc.batch, "batch size")->capture_default_str();
    c->add_option("--lr", tc.lr, "learning rate")->capture_default_str();
    c->add_option("--seed", tc.seed, "rng seed")->capture_default_str();
    c->callback([&tc] { run_train_codec(tc); });

    TrainHeadArgs te;
    CLI::App* e = app.add_subcommand("train-expr", "train the expression head");
    e->add_option("--corpus", te.corpus, "labeled corpus (.sfd)")->required();
    e->add_option("--out", te.out, "output checkpoint (.sfm)")->required();
    e->add_option("--classes", te.classes, "expression class count")->capture_default_str();
    e->add_option("--epochs", te.epochs, "training epochs")->capture_default_str();
    e->add_option("--batch", te.batch, "batch size")->capture_default_str();
    e->add_option("--lr", te.lr, "learning rate")->capture_default_str();
    e->add_option("--seed", te.seed, "rng seed")->capture_default_str();
    e->callback([&te] { run_train_head(te, true); });

    TrainHeadArgs tv;
    CLI::App* v = app.add_subcommand("train-verif", "train the verification head");
    v->add_option("--corpus", tv.corpus, "labeled corpus (.sfd)")->required();
    v->add_option("--out", tv.out, "output checkpoint (.sfm)")->required();
    v->add_option("--epochs", tv.epochs, "training epochs")->capture_default_str();
    v->add_option("--batch", tv.batch, "batch size")->capture_default_str();
    v->add_option("--lr", tv.lr, "learning rate")->capture_default_str();
    v->add_option("--seed", tv.seed, "rng seed")->capture_default_str();
    v->callback([&tv] { run_train_head(tv, false); });

    CompressArgs ca;
    CLI::App* cp = app.add_subcommand("compress", "compress a corpus to a bitstream archive");
    cp->add_option("--corpus", ca.corpus, "input corpus (.sfd)")->required();
    cp->add_option("--model", ca.model, "codec checkpoint (.sfm)")->required();
    cp->add_option("--out", ca.out, "output archive (.sfcs)")->required();
    cp->add_flag("--stats", ca.stats, "print avg bits per descriptor");
    cp->callback([&ca] { run_compress(ca); });

    DecompressArgs da;
    CLI::App* dp = app.add_subcommand("decompress", "decompress an archive to a corpus");
    dp->add_option("--archive", da.archive, "input archive (.sfcs)")->required();
    dp->add_option("--model", da.model, "codec checkpoint (.sfm)")->required();
    dp->add_option("--out", da.out, "output corpus (.sfd)")->required();
    dp->callback([&da] { run_decompress(da); });

    EvalArgs ea;
    CLI::App* ev = app.add_subcommand("eval-ra", "rate-accuracy / rate-distortion report");
    ev->add_option("--expr-corpus", ea.expr_corpus, "labeled expression corpus");
    ev->add_option("--expr-head", ea.expr_head, "expression head checkpoint");
    ev->add_option("--verif-corpus", ea.verif_corpus, "labeled identity corpus");
    ev->add_option("--verif-head", ea.verif_head, "verification head checkpoint");
    ev->add_option("--codec", ea.full_codecs, "full-mask codec checkpoint (repeatable)");
    ev->add_option("--expr-codec", ea.expr_codecs, "retrained delta,theta,l codec (repeatable)");
    ev->add_option("--verif-codec", ea.verif_codecs, "retrained alpha,beta codec (repeatable)");
    ev->add_option("--pairs", ea.pairs_path, "verification pair csv");
    ev->add_option("--pair-count", ea.pair_count, "generated pair count")->capture_default_str();
    ev->add_option("--seed", ea.seed, "rng seed for pair sampling")->capture_default_str();
    ev->add_option("--out", ea.out, "RA csv path (stdout when omitted)");
    ev->add_option("--rd-out", ea.rd_out, "RD csv path (default: <out>.rd.csv)");
    ev->callback([&ea] { run_eval_ra(ea); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    } catch (const sfc::ConfigError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    } catch (const sfc::DataError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 3;
    } catch (const sfc::NumericError& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 4;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "internal error: %s\n", err.what());
        return 1;
    }
    return 0;
}
