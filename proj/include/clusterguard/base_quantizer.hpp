#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>

#include "clusterguard/particles.hpp"

namespace clusterguard {

/// Storage precision of a reconstructed snapshot. f32 rounds every value to the nearest float,
/// as the raw writer does, and bound checks are made on the rounded value.
enum class Precision { f64, f32 };

inline double round_to(Precision p, double v) {
    return p == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

struct BaseCompressed {
    ParticleSet decompressed;
    /// Order-0 entropy size of the integer codes, in bytes (a reporting estimate, not a codec).
    std::size_t payload_bytes = 0;
    /// Coordinates where neither lattice neighbour met the bound after rounding; stored exactly.
    std::size_t exact_fallbacks = 0;
};

/// Bound on |round_to(prec, x) - x| for any x within `headroom` of a coordinate of the given sets.
double rounding_bound(Precision prec, std::initializer_list<const ParticleSet*> sets, double headroom = 0.0);

/// Uniform scalar quantizer x -> round_half_even(x / 2xi) * 2xi, so |x_hat - x| <= xi.
BaseCompressed base_compress(const ParticleSet& p, double xi, Precision precision = Precision::f64);

/// Shannon order-0 entropy of a symbol sequence, rounded up to whole bytes.
std::size_t order0_entropy_bytes(std::span<const std::int64_t> symbols);

struct BoundReport {
    std::size_t violations = 0;  // coordinates with |decomp - orig| > xi
    double max_abs_error = 0.0;
};

BoundReport count_bound_violations(const ParticleSet& orig, const ParticleSet& decomp, double xi);

struct ExternalPair {
    ParticleSet original;
    ParticleSet decompressed;
    BoundReport bound;
};

/// Loads an original dataset and an out-of-band decompressed counterpart (dataset prefixes).
/// Bound violations are reported, not fatal.
ExternalPair load_external_pair(const std::string& orig_prefix, const std::string& decomp_prefix, double xi);

}  // namespace clusterguard
