#include "clusterguard/fof.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace clusterguard {

DisjointSets::DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSets::find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
        const std::size_t next = parent_[x];
        parent_[x] = root;
        x = next;
    }
    return root;
}

void DisjointSets::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
}

FofLabels DisjointSets::canonical_labels() {
    const std::size_t n = parent_.size();
    FofLabels out;
    out.labels.resize(n);
    // Ascending scan: the first member seen for a root is its smallest index.
    std::vector<Index> first(n, static_cast<Index>(-1));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (first[r] == static_cast<Index>(-1)) {
            first[r] = static_cast<Index>(i);
            ++out.n_components;
        }
        out.labels[i] = first[r];
    }
    return out;
}

FofLabels fof_components(const ParticleSet& p, double b) {
    if (!(b > 0.0)) throw std::invalid_argument("fof_components: b must be positive");
    DisjointSets sets(p.size());
    if (p.size() > 1) {
        const GridIndex grid = build_grid(p, b);
        const double b2 = b * b;
        for_each_candidate_pair(grid, p, 0, grid.cell_count(), [&](Index i, Index j, double d2) {
            if (d2 <= b2) sets.unite(i, j);
        });
    }
    return sets.canonical_labels();
}

std::vector<std::size_t> component_sizes(const FofLabels& labels) {
    std::vector<std::size_t> count(labels.labels.size(), 0);
    for (const Index l : labels.labels) ++count[l];
    std::vector<std::size_t> sizes;
    sizes.reserve(labels.n_components);
    for (std::size_t i = 0; i < count.size(); ++i) {
        if (labels.labels[i] == i) sizes.push_back(count[i]);
    }
    return sizes;
}

HaloCatalog halo_catalog(const FofLabels& labels, std::size_t min_size) {
    HaloCatalog cat;
    cat.min_size = min_size;
    for (const std::size_t s : component_sizes(labels)) {
        if (s >= min_size) cat.sizes.push_back(s);
    }
    std::sort(cat.sizes.begin(), cat.sizes.end(), std::greater<>());
    return cat;
}

void write_labels(const std::filesystem::path& path, const FofLabels& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const Index l : labels.labels) {
        const std::uint64_t v = l;
        unsigned char bytes[8];
        for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(v >> (8 * k));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

}  // namespace clusterguard
