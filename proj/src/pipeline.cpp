#include "clusterguard/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace clusterguard {

PipelineResult run_pipeline(const ParticleSet& p_orig, const ParticleSet& p_hat0, const CorrectionParams& params,
                            int ranks, Precision precision, Stage2 stage2) {
    params.validate();
    PipelineResult out;
    out.pairs = find_vulnerable_pairs(p_orig, params.b, params.xi);
    if (ranks <= 1) {
        CorrectionResult c = correct(p_orig, p_hat0, out.pairs, params);
        out.iterations = c.iterations;
        out.converged = c.converged;
        out.final_loss = c.final_loss;
        out.loss_trace = std::move(c.loss_trace);
        out.tight_pairs_initial = c.tight_pairs_initial;
        out.coincident_events = c.coincident_events;
        out.delta = std::move(c.delta);
        out.edits = make_edit_log(p_orig, p_hat0, out.delta, params.xi, params.b, params.m, precision, stage2);
    } else {
        DistributedResult d = distributed_correct(p_orig, p_hat0, params, ranks, precision, stage2);
        out.iterations = d.report.iterations;
        out.converged = d.report.converged;
        out.final_loss = d.report.final_loss;
        out.loss_trace = d.report.loss_trace;
        out.tight_pairs_initial = d.report.tight_pairs_initial;
        out.delta = std::move(d.delta);
        out.edits = std::move(d.edits);
        out.distributed = std::move(d.report);
    }
    out.encoded = encode(out.edits.log);
    out.reconstructed = apply_edits(p_hat0, out.edits.log, precision);
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void Report::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void Report::add(const std::string& key, double value) { add(key, format_double(value)); }
void Report::add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
void Report::add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }

std::optional<std::string> Report::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

std::string Report::str() const {
    std::string s;
    for (const auto& [k, v] : entries_) s += k + ": " + v + "\n";
    return s;
}

Report Report::parse(const std::string& text) {
    Report r;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        r.add(line.substr(0, colon), line.substr(colon + 2));
    }
    return r;
}

void add_pipeline_fields(Report& report, const PipelineResult& r, const CorrectionParams& params, std::size_t n,
                         std::size_t base_bytes) {
    report.add("n", static_cast<std::uint64_t>(n));
    report.add("xi", params.xi);
    report.add("b", params.b);
    report.add("m", params.m);
    report.add("optimizer", std::string(params.optimizer == Optimizer::adam ? "adam" : "vanilla_pgd"));
    report.add("vulnerable_pairs", static_cast<std::uint64_t>(r.pairs.size()));
    report.add("editable_particles", static_cast<std::uint64_t>(r.pairs.editable.size()));
    report.add("tight_pairs_initial", static_cast<std::uint64_t>(r.tight_pairs_initial));
    report.add("initial_loss", r.loss_trace.empty() ? 0.0 : r.loss_trace.front());
    report.add("iterations", static_cast<std::uint64_t>(r.iterations));
    report.add("iteration_budget", iteration_budget(params.xi, r.tight_pairs_initial, params.eps_loss));
    report.add("final_loss", r.final_loss);
    report.add("converged", r.converged);
    report.add("coincident_events", static_cast<std::uint64_t>(r.coincident_events));
    report.add("n_edits", r.edits.log.header.n_edits);
    report.add("adjusted_indices", static_cast<std::uint64_t>(r.edits.adjusted));
    report.add("edit_bytes", static_cast<std::uint64_t>(r.encoded.size()));
    const double nn = n == 0 ? 1.0 : static_cast<double>(n);
    report.add("edit_bpp", 8.0 * static_cast<double>(r.encoded.size()) / nn);
    report.add("base_bytes", static_cast<std::uint64_t>(base_bytes));
    report.add("base_bpp", 8.0 * static_cast<double>(base_bytes) / nn);
    report.add("total_bpp", 8.0 * static_cast<double>(base_bytes + r.encoded.size()) / nn);
    if (r.distributed) {
        const DistributedReport& d = *r.distributed;
        report.add("ranks", d.ranks);
        report.add("rank_grid", std::to_string(d.grid[0]) + "x" + std::to_string(d.grid[1]) + "x" +
                                    std::to_string(d.grid[2]));
        report.add("ghost_width", d.ghost_width);
        const Imbalance im = imbalance(d);
        report.add("time_imbalance", im.time_imbalance);
        report.add("data_imbalance", im.data_imbalance);
        for (const auto& rr : d.per_rank) {
            const std::string p = "rank." + std::to_string(rr.rank_id) + ".";
            report.add(p + "owned", static_cast<std::uint64_t>(rr.owned));
            report.add(p + "ghosts", static_cast<std::uint64_t>(rr.ghosts));
            report.add(p + "local_pairs", static_cast<std::uint64_t>(rr.local_pairs));
            report.add(p + "owned_pairs", static_cast<std::uint64_t>(rr.owned_pairs));
            report.add(p + "ghost_tuples", static_cast<std::uint64_t>(rr.ghost_tuples_received));
            report.add(p + "seconds", rr.seconds);
        }
    } else {
        report.add("ranks", 1);
    }
}

}  // namespace clusterguard
