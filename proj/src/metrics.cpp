#include "clusterguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clusterguard {

MccCounts mcc_counts(const VulnerablePairSet& v, const ParticleSet& p_recon, double b) {
    MccCounts c;
    const double b2 = b * b;
    for (std::size_t k = 0; k < v.pairs.size(); ++k) {
        const bool now = squared_distance(p_recon, v.pairs[k][0], v.pairs[k][1]) <= b2;
        if (v.orig_linked[k]) {
            now ? ++c.tp : ++c.fn;
        } else {
            now ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

double mcc_value(const MccCounts& c) {
    const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return c.fp == 0 && c.fn == 0 ? 1.0 : 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mcc(const VulnerablePairSet& v, const ParticleSet& p_orig, const ParticleSet& p_recon, double b) {
    if (p_orig.size() != p_recon.size()) throw DataError("mcc: particle counts differ");
    return mcc_value(mcc_counts(v, p_recon, b));
}

std::size_t violated_pairs(const VulnerablePairSet& v, const ParticleSet& p_hat, double b) {
    const MccCounts c = mcc_counts(v, p_hat, b);
    return static_cast<std::size_t>(c.fp + c.fn);
}

HmfResult hmf(const HaloCatalog& catalog, double vol, std::size_t b_bins, double particle_mass) {
    if (!(vol > 0.0)) throw std::invalid_argument("hmf: volume must be positive");
    if (b_bins == 0) throw std::invalid_argument("hmf: need at least one bin");
    if (!(particle_mass > 0.0)) throw std::invalid_argument("hmf: particle mass must be positive");
    HmfResult r;
    if (catalog.sizes.empty()) return r;

    std::vector<double> logm;
    logm.reserve(catalog.sizes.size());
    for (const auto s : catalog.sizes) logm.push_back(std::log10(particle_mass * static_cast<double>(s)));
    const auto [mn, mx] = std::minmax_element(logm.begin(), logm.end());
    double lo = *mn, hi = *mx;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    r.b_bins = b_bins;
    r.bin_edges.resize(b_bins + 1);
    const double width = (hi - lo) / static_cast<double>(b_bins);
    for (std::size_t k = 0; k <= b_bins; ++k) r.bin_edges[k] = lo + width * static_cast<double>(k);
    r.bin_edges.back() = hi;

    r.counts.assign(b_bins, 0);
    for (const double x : logm) {
        auto k = static_cast<std::size_t>(std::floor((x - lo) / width));
        k = std::min(k, b_bins - 1);
        ++r.counts[k];
    }
    r.density.resize(b_bins);
    for (std::size_t k = 0; k < b_bins; ++k) r.density[k] = static_cast<double>(r.counts[k]) / (vol * r.bin_width(k));
    return r;
}

std::vector<std::optional<double>> hmf_rel_error(const HmfResult& ref, const HmfResult& test) {
    if (ref.empty() || test.empty()) throw std::invalid_argument("hmf_rel_error: empty mass function");
    if (test.bin_edges.back() < ref.bin_edges.front() || test.bin_edges.front() > ref.bin_edges.back()) {
        throw std::invalid_argument("hmf_rel_error: mass ranges are disjoint");
    }
    const std::size_t nr = ref.density.size();
    auto ref_at = [&](double x) {
        if (nr == 1) return ref.density[0];
        std::size_t seg = 0;  // segment between centres seg and seg+1
        while (seg + 2 < nr && x > ref.bin_center(seg + 1)) ++seg;
        const double x0 = ref.bin_center(seg), x1 = ref.bin_center(seg + 1);
        const double t = (x - x0) / (x1 - x0);
        return ref.density[seg] + t * (ref.density[seg + 1] - ref.density[seg]);
    };
    std::vector<std::optional<double>> out(test.density.size());
    for (std::size_t k = 0; k < test.density.size(); ++k) {
        const double r = ref_at(test.bin_center(k));
        if (r > 0.0) out[k] = std::abs(test.density[k] - r) / r;
    }
    return out;
}

RateDistortion rate_distortion(const ParticleSet& p_orig, const ParticleSet& p_recon, std::size_t base_bytes,
                               std::size_t edit_bytes) {
    if (p_orig.size() != p_recon.size()) throw DataError("rate_distortion: particle counts differ");
    if (p_orig.empty()) throw DataError("rate_distortion: empty data");
    RateDistortion rd;
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        const auto& o = p_orig.axis(a);
        const auto& r = p_recon.axis(a);
        for (std::size_t i = 0; i < o.size(); ++i) sum += (r[i] - o[i]) * (r[i] - o[i]);
    }
    const double n = static_cast<double>(p_orig.size());
    rd.mse = sum / (3.0 * n);
    const double range = bounding_box(p_orig.xs(), p_orig.ys(), p_orig.zs()).global_range();
    rd.psnr_db = rd.mse == 0.0 ? std::numeric_limits<double>::infinity() : 20.0 * std::log10(range / std::sqrt(rd.mse));
    const double total = static_cast<double>(base_bytes + edit_bytes);
    rd.bpp = 8.0 * total / n;
    rd.ratio = total > 0.0 ? 12.0 * n / total : std::numeric_limits<double>::infinity();
    return rd;
}

}  // namespace clusterguard
