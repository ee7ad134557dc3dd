// clusterguard: generate, base-compress, correct, reconstruct and verify particle snapshots.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "clusterguard/base_quantizer.hpp"
#include "clusterguard/fof.hpp"
#include "clusterguard/metrics.hpp"
#include "clusterguard/parallel.hpp"
#include "clusterguard/pipeline.hpp"

using namespace clusterguard;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

void emit(const Report& report, const std::string& path) {
    std::cout << report.str();
    if (path.empty()) return;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << report.str();
}

// Keeps the reference box when it still covers the data.
void save_with_box(const std::string& prefix, const ParticleSet& p, const DomainBox& box) {
    const DomainBox b = p.empty() ? box : merge(box, p.bbox());
    save_dataset(prefix, ParticleSet(p.xs(), p.ys(), p.zs(), b));
}

struct BoundFlags {
    std::optional<double> xi;
    std::optional<double> xi_rel;

    void attach(CLI::App* cmd) {
        auto* a = cmd->add_option("--xi", xi, "absolute per-coordinate error bound");
        auto* b = cmd->add_option("--xi-rel", xi_rel, "error bound relative to the global coordinate range");
        a->excludes(b);
    }
    double resolve(const ParticleSet& p) const {
        if (xi.has_value() == xi_rel.has_value()) throw UsageError("exactly one of --xi / --xi-rel is required");
        const double v = xi ? *xi : absolute_bound(*xi_rel, p);
        if (!(v > 0.0)) throw UsageError("error bound must be positive");
        return v;
    }
};

struct LinkFlags {
    std::optional<double> b;
    std::optional<double> eta;

    void attach(CLI::App* cmd) {
        auto* x = cmd->add_option("--b", b, "linking length");
        auto* y = cmd->add_option("--eta", eta, "linking length as a fraction of the mean separation");
        x->excludes(y);
    }
    double resolve(const ParticleSet& p) const {
        if (b.has_value() == eta.has_value()) throw UsageError("exactly one of --b / --eta is required");
        const double v = b ? *b : linking_length(*eta, p.bbox().volume(), p.size());
        if (!(v > 0.0)) throw UsageError("linking length must be positive");
        return v;
    }
};

// ---------------------------------------------------------------------------

struct GenArgs {
    std::string kind = "uniform";
    std::size_t n = 0;
    std::size_t blobs = 1;
    double sigma = 0.01;
    double background = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen(const GenArgs& a) {
    SynthSpec spec;
    spec.kind = a.kind == "clustered" ? SynthKind::clustered : SynthKind::uniform;
    spec.n = a.n;
    spec.blobs = a.blobs;
    spec.sigma = a.sigma;
    spec.background_fraction = a.background;
    spec.seed = a.seed;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    save_dataset(a.out, gen_synthetic(spec));
    return kExitOk;
}

struct CompressArgs {
    std::string in;
    std::string out;
    BoundFlags bound;
    std::string report;
};

int cmd_compress(const CompressArgs& a) {
    const ParticleSet p = load_dataset(a.in);
    const double xi = a.bound.resolve(p);
    const BaseCompressed bc = base_compress(p, xi, Precision::f32);
    save_with_box(a.out, bc.decompressed, p.bbox());
    const BoundReport br = count_bound_violations(p, bc.decompressed, xi);
    Report r;
    r.add("n", static_cast<std::uint64_t>(p.size()));
    r.add("xi", xi);
    r.add("base_bytes", static_cast<std::uint64_t>(bc.payload_bytes));
    r.add("base_bpp", p.empty() ? 0.0 : 8.0 * static_cast<double>(bc.payload_bytes) / static_cast<double>(p.size()));
    r.add("exact_fallbacks", static_cast<std::uint64_t>(bc.exact_fallbacks));
    r.add("bound_violations", static_cast<std::uint64_t>(br.violations));
    r.add("max_abs_error", br.max_abs_error);
    emit(r, a.report);
    return kExitOk;
}

struct CorrectArgs {
    std::string orig;
    std::string decomp;
    bool builtin = false;
    std::string decomp_out;
    BoundFlags bound;
    LinkFlags link;
    int m = 16;
    int ranks = 1;
    std::string optimizer = "adam";
    std::size_t t_max = 10'000;
    double eps_loss = 1e-10;
    double step = 0.0;
    double alpha = 1e-3;
    std::string stage2 = "deflate";
    std::string out;
    std::string report;
};

int cmd_correct(const CorrectArgs& a) {
    if (a.builtin == !a.decomp.empty()) throw UsageError("exactly one of --decomp / --builtin is required");
    if (a.ranks < 1) throw UsageError("--ranks must be at least 1");
    const ParticleSet orig = load_dataset(a.orig);
    CorrectionParams params;
    params.xi = a.bound.resolve(orig);
    params.b = a.link.resolve(orig);
    params.m = a.m;
    params.t_max = a.t_max;
    params.eps_loss = a.eps_loss;
    params.optimizer = a.optimizer == "vanilla_pgd" ? Optimizer::vanilla_pgd : Optimizer::adam;
    params.vanilla_step = a.step;
    params.alpha = a.alpha;
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    ParticleSet decomp;
    std::size_t base_bytes = 0;
    if (a.builtin) {
        BaseCompressed bc = base_compress(orig, params.xi, Precision::f32);
        base_bytes = bc.payload_bytes;
        decomp = std::move(bc.decompressed);
        if (!a.decomp_out.empty()) save_with_box(a.decomp_out, decomp, orig.bbox());
    } else {
        decomp = load_dataset(a.decomp);
        if (decomp.size() != orig.size()) throw DataError("original and decompressed particle counts differ");
    }

    params.storage_rounding = rounding_bound(Precision::f32, {&orig, &decomp}, params.xi);
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("error bound too small for float32 storage: ") + e.what());
    }
    const Stage2 stage2 = a.stage2 == "stored" ? Stage2::stored : Stage2::deflate;
    const PipelineResult res = run_pipeline(orig, decomp, params, a.ranks, Precision::f32, stage2);
    write_bytes(a.out, res.encoded);

    Report r;
    add_pipeline_fields(r, res, params, orig.size(), base_bytes);
    r.add("violated_pairs_before", static_cast<std::uint64_t>(violated_pairs(res.pairs, decomp, params.b)));
    r.add("violated_pairs_after", static_cast<std::uint64_t>(violated_pairs(res.pairs, res.reconstructed, params.b)));
    emit(r, a.report);
    return res.converged ? kExitOk : kExitNotConverged;
}

struct ReconstructArgs {
    std::string decomp;
    std::string edits;
    std::string out;
};

int cmd_reconstruct(const ReconstructArgs& a) {
    const ParticleSet decomp = load_dataset(a.decomp);
    const EditLog log = decode(read_bytes(a.edits));
    const ParticleSet recon = apply_edits(decomp, log, Precision::f32);
    save_with_box(a.out, recon, decomp.bbox());
    return kExitOk;
}

struct VerifyArgs {
    std::string orig;
    std::string recon;
    BoundFlags bound;
    LinkFlags link;
    std::size_t min_size = kDefaultMinHaloSize;
    std::size_t bins = kDefaultHmfBins;
    std::string edits;
    std::size_t base_bytes = 0;
    std::string report;
};

int cmd_verify(const VerifyArgs& a) {
    const ParticleSet orig = load_dataset(a.orig);
    const ParticleSet recon = load_dataset(a.recon);
    if (orig.size() != recon.size()) throw DataError("original and reconstructed particle counts differ");
    const double xi = a.bound.resolve(orig);
    const double b = a.link.resolve(orig);
    if (a.bins == 0) throw UsageError("--bins must be positive");

    const VulnerablePairSet v = find_vulnerable_pairs(orig, b, xi);
    const MccCounts counts = mcc_counts(v, recon, b);
    const FofLabels lo = fof_components(orig, b);
    const FofLabels lr = fof_components(recon, b);
    const BoundReport br = count_bound_violations(orig, recon, xi);

    Report r;
    r.add("n", static_cast<std::uint64_t>(orig.size()));
    r.add("xi", xi);
    r.add("b", b);
    r.add("vulnerable_pairs", static_cast<std::uint64_t>(v.size()));
    r.add("tp", counts.tp);
    r.add("tn", counts.tn);
    r.add("fp", counts.fp);
    r.add("fn", counts.fn);
    r.add("mcc", mcc_value(counts));
    r.add("violated_pairs", counts.fp + counts.fn);
    r.add("labels_identical", lo == lr);
    r.add("components_orig", static_cast<std::uint64_t>(lo.n_components));
    r.add("components_recon", static_cast<std::uint64_t>(lr.n_components));
    r.add("bound_violations", static_cast<std::uint64_t>(br.violations));
    r.add("max_abs_error", br.max_abs_error);

    const HaloCatalog co = halo_catalog(lo, a.min_size);
    const HaloCatalog cr = halo_catalog(lr, a.min_size);
    r.add("halos_orig", static_cast<std::uint64_t>(co.sizes.size()));
    r.add("halos_recon", static_cast<std::uint64_t>(cr.sizes.size()));
    const double vol = orig.bbox().volume();
    const HmfResult ho = hmf(co, vol > 0.0 ? vol : 1.0, a.bins);
    const HmfResult hr = hmf(cr, vol > 0.0 ? vol : 1.0, a.bins);
    if (!ho.empty() && !hr.empty()) {
        double worst = 0.0, sum = 0.0;
        std::size_t defined = 0;
        for (const auto& e : hmf_rel_error(ho, hr)) {
            if (!e) continue;
            worst = std::max(worst, *e);
            sum += *e;
            ++defined;
        }
        r.add("hmf_bins_compared", static_cast<std::uint64_t>(defined));
        r.add("hmf_rel_error_max", worst);
        r.add("hmf_rel_error_mean", defined ? sum / static_cast<double>(defined) : 0.0);
    } else {
        r.add("hmf_bins_compared", std::uint64_t{0});
    }

    if (!orig.empty()) {
        const std::size_t edit_bytes = a.edits.empty() ? 0 : read_bytes(a.edits).size();
        const RateDistortion rd = rate_distortion(orig, recon, a.base_bytes, edit_bytes);
        r.add("mse", rd.mse);
        r.add("psnr_db", rd.psnr_db);
        r.add("edit_bytes", static_cast<std::uint64_t>(edit_bytes));
        r.add("bpp", rd.bpp);
        r.add("ratio", rd.ratio);
    }
    emit(r, a.report);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster-preserving correction for error-bounded particle compression"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "worker thread cap (default: CLUSTER_GUARD_THREADS or all cores)");

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "write a synthetic dataset");
    g->add_option("--kind", gen.kind)->check(CLI::IsMember({"uniform", "clustered"}));
    g->add_option("--n", gen.n)->required();
    g->add_option("--blobs", gen.blobs);
    g->add_option("--sigma", gen.sigma, "blob width as a fraction of the box edge");
    g->add_option("--background", gen.background, "fraction of uniformly placed particles");
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out, "dataset prefix")->required();

    CompressArgs comp;
    auto* c = app.add_subcommand("compress", "run the built-in base quantizer");
    c->add_option("--in", comp.in)->required();
    c->add_option("--out", comp.out, "decompressed dataset prefix")->required();
    comp.bound.attach(c);
    c->add_option("--report", comp.report);

    CorrectArgs corr;
    auto* k = app.add_subcommand("correct", "detect, correct and encode an edit log");
    k->add_option("--orig", corr.orig)->required();
    auto* dec = k->add_option("--decomp", corr.decomp);
    auto* bi = k->add_flag("--builtin", corr.builtin, "base-compress the original with the built-in quantizer");
    dec->excludes(bi);
    k->add_option("--decomp-out", corr.decomp_out, "with --builtin, also write the decompressed dataset");
    corr.bound.attach(k);
    corr.link.attach(k);
    k->add_option("--m", corr.m);
    k->add_option("--ranks", corr.ranks);
    k->add_option("--optimizer", corr.optimizer)->check(CLI::IsMember({"adam", "vanilla_pgd"}));
    k->add_option("--t-max", corr.t_max);
    k->add_option("--eps-loss", corr.eps_loss);
    k->add_option("--alpha", corr.alpha, "Adam learning rate");
    k->add_option("--step", corr.step, "fixed vanilla_pgd step (default 1/L estimate)");
    k->add_option("--stage2", corr.stage2)->check(CLI::IsMember({"deflate", "stored"}));
    k->add_option("--out", corr.out, "edit log path")->required();
    k->add_option("--report", corr.report);

    ReconstructArgs rec;
    auto* r = app.add_subcommand("reconstruct", "apply an edit log to decompressed data");
    r->add_option("--decomp", rec.decomp)->required();
    r->add_option("--edits", rec.edits)->required();
    r->add_option("--out", rec.out)->required();

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "compare a reconstruction against the original");
    v->add_option("--orig", ver.orig)->required();
    v->add_option("--recon", ver.recon)->required();
    ver.bound.attach(v);
    ver.link.attach(v);
    v->add_option("--min-size", ver.min_size);
    v->add_option("--bins", ver.bins);
    v->add_option("--edits", ver.edits, "edit log, counted in bpp");
    v->add_option("--base-bytes", ver.base_bytes, "base payload size, counted in bpp");
    v->add_option("--report", ver.report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (threads > 0) set_max_threads(threads);
        if (*g) return cmd_gen(gen);
        if (*c) return cmd_compress(comp);
        if (*k) return cmd_correct(corr);
        if (*r) return cmd_reconstruct(rec);
        if (*v) return cmd_verify(ver);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
