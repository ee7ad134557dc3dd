#include "clusterguard/base_quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace clusterguard {

std::size_t order0_entropy_bytes(std::span<const std::int64_t> symbols) {
    if (symbols.empty()) return 0;
    std::map<std::int64_t, std::size_t> freq;
    for (const auto s : symbols) ++freq[s];
    const double n = static_cast<double>(symbols.size());
    double bits = 0.0;
    for (const auto& [sym, count] : freq) {
        const double c = static_cast<double>(count);
        bits -= c * std::log2(c / n);
    }
    return static_cast<std::size_t>(std::ceil(bits / 8.0));
}

double rounding_bound(Precision prec, std::initializer_list<const ParticleSet*> sets, double headroom) {
    if (prec == Precision::f64) return 0.0;
    double top = 0.0;
    for (const ParticleSet* p : sets) {
        for (int a = 0; a < 3; ++a) {
            for (const double v : p->axis(a)) top = std::max(top, std::abs(v));
        }
    }
    // Relative half-ulp of float32 plus the subnormal spacing.
    return (top + headroom) * 0x1.0p-24 + 0x1.0p-149;
}

BaseCompressed base_compress(const ParticleSet& p, double xi, Precision precision) {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw std::invalid_argument("base_compress: xi must be positive");
    const double step = 2.0 * xi;
    BaseCompressed out;
    std::vector<std::int64_t> codes;
    codes.reserve(3 * p.size());
    std::vector<double> axes[3];
    for (int a = 0; a < 3; ++a) {
        const auto& src = p.axis(a);
        axes[a].resize(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) {
            const double x = src[i];
            const double k = std::nearbyint(x / step);
            // Rounding in x / step or in the output precision can leave a tie a hair outside
            // the bound; the neighbouring lattice point then satisfies it.
            double chosen = x;
            bool found = false;
            for (const double cand : {k, k - 1.0, k + 1.0}) {
                const double v = round_to(precision, cand * step);
                if (std::abs(v - x) <= xi) {
                    chosen = v;
                    codes.push_back(static_cast<std::int64_t>(cand));
                    found = true;
                    break;
                }
            }
            if (!found) ++out.exact_fallbacks;
            axes[a][i] = chosen;
        }
    }
    out.decompressed = ParticleSet(std::move(axes[0]), std::move(axes[1]), std::move(axes[2]));
    out.payload_bytes = order0_entropy_bytes(codes) + 4 * out.exact_fallbacks;
    return out;
}

BoundReport count_bound_violations(const ParticleSet& orig, const ParticleSet& decomp, double xi) {
    if (orig.size() != decomp.size()) throw DataError("original and decompressed particle counts differ");
    BoundReport r;
    for (int a = 0; a < 3; ++a) {
        const auto& o = orig.axis(a);
        const auto& d = decomp.axis(a);
        for (std::size_t i = 0; i < o.size(); ++i) {
            const double err = std::abs(d[i] - o[i]);
            r.max_abs_error = std::max(r.max_abs_error, err);
            r.violations += err > xi;
        }
    }
    return r;
}

ExternalPair load_external_pair(const std::string& orig_prefix, const std::string& decomp_prefix, double xi) {
    ExternalPair out{load_dataset(orig_prefix), load_dataset(decomp_prefix), {}};
    if (out.original.size() != out.decompressed.size()) {
        throw DataError("original has " + std::to_string(out.original.size()) + " particles, decompressed has " +
                        std::to_string(out.decompressed.size()));
    }
    out.bound = count_bound_violations(out.original, out.decompressed, xi);
    return out;
}

}  // namespace clusterguard
