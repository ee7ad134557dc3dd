#include "clusterguard/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "clusterguard/parallel.hpp"

namespace clusterguard {

namespace {

// Cells are made at least this much wider than requested so rounding in the
// cell-coordinate division cannot push two particles within min_width two cells apart.
constexpr double kWidthSlack = 1.0 + 1e-9;

// Forward half of the 26-neighbourhood.
constexpr std::array<std::array<int, 3>, 13> kForward = {{
    {1, 0, 0},
    {-1, 1, 0}, {0, 1, 0}, {1, 1, 0},
    {-1, -1, 1}, {0, -1, 1}, {1, -1, 1},
    {-1, 0, 1}, {0, 0, 1}, {1, 0, 1},
    {-1, 1, 1}, {0, 1, 1}, {1, 1, 1},
}};

}  // namespace

Band::Band(double b_, double xi) : b(b_) {
    const double spread = 2.0 * std::sqrt(3.0) * xi;
    lower = b - spread;
    upper = b + spread;
    lower_sq = lower * lower;
    upper_sq = upper * upper;
    b_sq = b * b;
}

std::array<std::int64_t, 3> GridIndex::cell_coords(const Vec3& p) const {
    std::array<std::int64_t, 3> c{};
    for (int k = 0; k < 3; ++k) {
        const double t = std::floor((p[k] - origin[k]) / cell_width[k]);
        c[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(t), 0, dims[k] - 1);
    }
    return c;
}

GridIndex build_grid(const ParticleSet& p, double min_width) {
    if (!(min_width > 0.0) || !std::isfinite(min_width)) throw std::invalid_argument("build_grid: min_width must be positive");
    if (p.size() > std::numeric_limits<Index>::max()) throw std::length_error("build_grid: too many particles");

    const std::size_t n = p.size();
    const DomainBox box = p.bbox();
    GridIndex g;
    g.origin = box.lo;

    const double target = min_width * kWidthSlack;
    for (int k = 0; k < 3; ++k) {
        const double cells = std::floor(box.extent(k) / target);
        g.dims[k] = cells >= 1.0 ? static_cast<std::int64_t>(std::min(cells, 1e6)) : 1;
    }
    const auto product = [&] { return g.dims[0] * g.dims[1] * g.dims[2]; };
    const auto cap = static_cast<std::int64_t>(std::max<std::size_t>(n, 1));
    if (product() > cap) {
        const double f = std::cbrt(static_cast<double>(cap) / static_cast<double>(product()));
        for (auto& d : g.dims) d = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(static_cast<double>(d) * f)));
        while (product() > cap) {
            auto it = std::max_element(g.dims.begin(), g.dims.end());
            --*it;
        }
    }
    for (int k = 0; k < 3; ++k) {
        g.cell_width[k] = std::max(box.extent(k) / static_cast<double>(g.dims[k]), min_width);
    }

    const std::int64_t ncell = g.cell_count();
    std::vector<std::int64_t> cell_of(n);
    std::vector<std::size_t> counts(static_cast<std::size_t>(ncell) + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        cell_of[i] = g.cell_id(g.cell_coords(p.point(i)));
        ++counts[static_cast<std::size_t>(cell_of[i]) + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    g.cell_start = counts;
    g.sorted_ids.resize(n);
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    for (std::size_t i = 0; i < n; ++i) g.sorted_ids[cursor[static_cast<std::size_t>(cell_of[i])]++] = static_cast<Index>(i);

    std::size_t nonempty = 0;
    for (std::int64_t c = 0; c < ncell; ++c) nonempty += g.cell_start[c + 1] > g.cell_start[c];
    g.mean_occupancy = nonempty ? static_cast<double>(n) / static_cast<double>(nonempty) : 0.0;
    return g;
}

void for_each_candidate_pair(const GridIndex& g, const ParticleSet& p, std::int64_t first_cell, std::int64_t last_cell,
                             const std::function<void(Index, Index, double)>& visit) {
    for (std::int64_t c = first_cell; c < last_cell; ++c) {
        const auto here = g.cell(c);
        if (here.empty()) continue;
        const std::int64_t cx = c % g.dims[0];
        const std::int64_t cy = (c / g.dims[0]) % g.dims[1];
        const std::int64_t cz = c / (g.dims[0] * g.dims[1]);

        for (std::size_t a = 0; a < here.size(); ++a) {
            for (std::size_t b = a + 1; b < here.size(); ++b) {
                visit(here[a], here[b], squared_distance(p, here[a], here[b]));
            }
        }
        for (const auto& off : kForward) {
            const std::int64_t nx = cx + off[0], ny = cy + off[1], nz = cz + off[2];
            if (nx < 0 || ny < 0 || nz < 0 || nx >= g.dims[0] || ny >= g.dims[1] || nz >= g.dims[2]) continue;
            const auto there = g.cell(g.cell_id({nx, ny, nz}));
            for (const Index i : here) {
                for (const Index j : there) visit(i, j, squared_distance(p, i, j));
            }
        }
    }
}

VulnerablePairSet make_pair_set(std::vector<std::array<Index, 2>> pairs, std::vector<std::uint8_t> linked) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pairs[a] < pairs[b]; });

    VulnerablePairSet out;
    out.pairs.reserve(pairs.size());
    out.orig_linked.reserve(pairs.size());
    for (const std::size_t k : order) {
        out.pairs.push_back(pairs[k]);
        out.orig_linked.push_back(linked[k]);
    }
    out.editable.reserve(2 * pairs.size());
    for (const auto& pr : out.pairs) {
        out.editable.push_back(pr[0]);
        out.editable.push_back(pr[1]);
    }
    std::sort(out.editable.begin(), out.editable.end());
    out.editable.erase(std::unique(out.editable.begin(), out.editable.end()), out.editable.end());
    return out;
}

VulnerablePairSet find_vulnerable_pairs(const ParticleSet& p, double b, double xi) {
    if (!(b > 0.0)) throw std::invalid_argument("find_vulnerable_pairs: b must be positive");
    if (!(xi >= 0.0)) throw std::invalid_argument("find_vulnerable_pairs: xi must be non-negative");
    if (p.size() < 2 || xi == 0.0) return {};

    const Band band(b, xi);
    const GridIndex grid = build_grid(p, band.upper);
    const std::int64_t ncell = grid.cell_count();

    // Pass 1 counts per chunk, pass 2 fills exact slots; chunk order fixes the layout.
    const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(ncell), 4 * std::size_t{max_threads()});
    std::vector<std::size_t> counts(chunks + 1, 0);
    parallel_chunks(static_cast<std::size_t>(ncell), chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        std::size_t local = 0;
        for_each_candidate_pair(grid, p, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi),
                                [&](Index, Index, double d2) { local += band.contains_sq(d2); });
        counts[c + 1] = local;
    });
    std::partial_sum(counts.begin(), counts.end(), counts.begin());

    std::vector<std::array<Index, 2>> pairs(counts.back());
    std::vector<std::uint8_t> linked(counts.back());
    parallel_chunks(static_cast<std::size_t>(ncell), chunks, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        std::size_t slot = counts[c];
        for_each_candidate_pair(grid, p, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi),
                                [&](Index i, Index j, double d2) {
                                    if (!band.contains_sq(d2)) return;
                                    pairs[slot] = {std::min(i, j), std::max(i, j)};
                                    linked[slot] = d2 <= band.b_sq;
                                    ++slot;
                                });
    });
    return make_pair_set(std::move(pairs), std::move(linked));
}

VulnerablePairSet brute_force_pairs(const ParticleSet& p, double b, double xi, std::size_t limit) {
    if (p.size() > limit) throw std::length_error("brute_force_pairs: particle count exceeds the scan limit");
    if (!(b > 0.0)) throw std::invalid_argument("brute_force_pairs: b must be positive");
    if (!(xi >= 0.0)) throw std::invalid_argument("brute_force_pairs: xi must be non-negative");
    const Band band(b, xi);
    std::vector<std::array<Index, 2>> pairs;
    std::vector<std::uint8_t> linked;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            const double d2 = squared_distance(p, i, j);
            if (band.contains_sq(d2)) {
                pairs.push_back({static_cast<Index>(i), static_cast<Index>(j)});
                linked.push_back(d2 <= band.b_sq);
            }
        }
    }
    return make_pair_set(std::move(pairs), std::move(linked));
}

}  // namespace clusterguard
