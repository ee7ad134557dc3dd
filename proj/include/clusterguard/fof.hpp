#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "clusterguard/particles.hpp"
#include "clusterguard/spatial_index.hpp"

namespace clusterguard {

/// Friends-of-friends component labels; each label is the smallest particle index in its component.
struct FofLabels {
    std::vector<Index> labels;
    std::size_t n_components = 0;

    friend bool operator==(const FofLabels&, const FofLabels&) = default;
};

struct HaloCatalog {
    std::vector<std::size_t> sizes;  // descending
    std::size_t min_size = 0;
};

inline constexpr std::size_t kDefaultMinHaloSize = 20;

/// Union-find with path compression and union by size.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n);
    std::size_t find(std::size_t x);
    void unite(std::size_t a, std::size_t b);
    /// Canonical labels: smallest member index of each set.
    FofLabels canonical_labels();

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

/// Components of the graph linking every pair with distance <= b.
FofLabels fof_components(const ParticleSet& p, double b);

HaloCatalog halo_catalog(const FofLabels& labels, std::size_t min_size = kDefaultMinHaloSize);

/// Sizes of every component, in order of first appearance of its label.
std::vector<std::size_t> component_sizes(const FofLabels& labels);

void write_labels(const std::filesystem::path& path, const FofLabels& labels);

}  // namespace clusterguard
