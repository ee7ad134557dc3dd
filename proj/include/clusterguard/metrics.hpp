#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "clusterguard/fof.hpp"
#include "clusterguard/particles.hpp"
#include "clusterguard/spatial_index.hpp"

namespace clusterguard {

/// Link-state agreement over vulnerable pairs (positive = linked).
struct MccCounts {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::uint64_t total() const { return tp + tn + fp + fn; }
};

MccCounts mcc_counts(const VulnerablePairSet& v, const ParticleSet& p_recon, double b);

/// Matthews correlation coefficient. A zero denominator yields 1 when fp = fn = 0, else 0.
double mcc_value(const MccCounts& c);
double mcc(const VulnerablePairSet& v, const ParticleSet& p_orig, const ParticleSet& p_recon, double b);

/// Vulnerable pairs whose link state differs between the original and `p_hat`.
std::size_t violated_pairs(const VulnerablePairSet& v, const ParticleSet& p_hat, double b);

struct HmfResult {
    std::vector<double> bin_edges;  // log10 mass, B + 1 values
    std::vector<double> density;    // dn/dlog10M per bin
    std::vector<std::uint64_t> counts;
    std::size_t b_bins = 0;

    bool empty() const { return density.empty(); }
    double bin_center(std::size_t k) const { return 0.5 * (bin_edges[k] + bin_edges[k + 1]); }
    double bin_width(std::size_t k) const { return bin_edges[k + 1] - bin_edges[k]; }
};

inline constexpr std::size_t kDefaultHmfBins = 50;

/// Halo mass function over B equal-width log10 bins spanning [min M, max M]; a catalog whose
/// masses are all equal spans one dex centred on that mass.
HmfResult hmf(const HaloCatalog& catalog, double vol, std::size_t b_bins = kDefaultHmfBins, double particle_mass = 1.0);

/// Per test bin: |test - ref(x)| / ref(x), with ref linearly interpolated (and extrapolated
/// from its end segments) at the test bin centres. Empty where ref(x) <= 0.
std::vector<std::optional<double>> hmf_rel_error(const HmfResult& ref, const HmfResult& test);

struct RateDistortion {
    double psnr_db = 0.0;  // +inf when the reconstruction is exact
    double bpp = 0.0;
    double ratio = 0.0;
    double mse = 0.0;
};

RateDistortion rate_distortion(const ParticleSet& p_orig, const ParticleSet& p_recon, std::size_t base_bytes,
                               std::size_t edit_bytes);

}  // namespace clusterguard
