#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "clusterguard/particles.hpp"

namespace clusterguard {

using Index = std::uint32_t;

/// Uniform cell grid over a particle set, stored as a counting-sort layout:
/// particles of cell c are sorted_ids[cell_start[c] .. cell_start[c+1]).
struct GridIndex {
    std::array<std::int64_t, 3> dims{1, 1, 1};
    Vec3 cell_width{0.0, 0.0, 0.0};
    Vec3 origin{0.0, 0.0, 0.0};
    std::vector<std::size_t> cell_start;
    std::vector<Index> sorted_ids;
    double mean_occupancy = 0.0;

    std::int64_t cell_count() const { return dims[0] * dims[1] * dims[2]; }
    std::array<std::int64_t, 3> cell_coords(const Vec3& p) const;
    std::int64_t cell_id(const std::array<std::int64_t, 3>& c) const { return c[0] + dims[0] * (c[1] + dims[1] * c[2]); }
    std::span<const Index> cell(std::int64_t id) const {
        return {sorted_ids.data() + cell_start[id], cell_start[id + 1] - cell_start[id]};
    }
};

/// Grid with cell side >= min_width on every axis and at most N cells.
GridIndex build_grid(const ParticleSet& p, double min_width);

/// Pairs (i < j) whose original distance lies in (b - 2*sqrt(3)*xi, b + 2*sqrt(3)*xi].
struct VulnerablePairSet {
    std::vector<std::array<Index, 2>> pairs;
    /// One flag per pair: original distance <= b.
    std::vector<std::uint8_t> orig_linked;
    /// Sorted union of pair endpoints.
    std::vector<Index> editable;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
    friend bool operator==(const VulnerablePairSet&, const VulnerablePairSet&) = default;
};

/// Squared-distance thresholds of the vulnerable band.
struct Band {
    double b = 0.0;
    double lower = 0.0;  // exclusive
    double upper = 0.0;  // inclusive
    double lower_sq = 0.0;
    double upper_sq = 0.0;
    double b_sq = 0.0;

    Band(double b, double xi);
    bool contains_sq(double d2) const { return (lower < 0.0 || d2 > lower_sq) && d2 <= upper_sq; }
};

inline double squared_distance(const ParticleSet& p, std::size_t i, std::size_t j) {
    const double dx = p.xs()[i] - p.xs()[j];
    const double dy = p.ys()[i] - p.ys()[j];
    const double dz = p.zs()[i] - p.zs()[j];
    return dx * dx + dy * dy + dz * dz;
}

/// Calls visit(i, j, d2) for every unordered pair sharing a cell or adjacent cells, each once
/// (same cell plus the 13 forward neighbours). Sequential; the caller filters by distance.
void for_each_candidate_pair(const GridIndex& grid, const ParticleSet& p, std::int64_t first_cell,
                             std::int64_t last_cell, const std::function<void(Index, Index, double)>& visit);

VulnerablePairSet find_vulnerable_pairs(const ParticleSet& p_orig, double b, double xi);

inline constexpr std::size_t kBruteForceLimit = 10'000;

/// O(N^2) reference enumeration. Throws std::length_error above `limit` particles.
VulnerablePairSet brute_force_pairs(const ParticleSet& p_orig, double b, double xi,
                                    std::size_t limit = kBruteForceLimit);

/// Sorts pairs lexicographically, derives the editable set. Pairs must already be i < j.
VulnerablePairSet make_pair_set(std::vector<std::array<Index, 2>> pairs, std::vector<std::uint8_t> linked);

}  // namespace clusterguard
