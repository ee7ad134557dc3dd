#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "clusterguard/parallel.hpp"
#include "clusterguard/spatial_index.hpp"
#include "support.hpp"

using namespace clusterguard;

namespace {

const double kSqrt3 = std::sqrt(3.0);

bool is_subset(const VulnerablePairSet& a, const VulnerablePairSet& b) {
    return std::includes(b.pairs.begin(), b.pairs.end(), a.pairs.begin(), a.pairs.end());
}

}  // namespace

TEST_CASE("build_grid: single particle") {
    const ParticleSet p = cgtest::make_set({{0.3, 0.4, 0.5}});
    const GridIndex g = build_grid(p, 0.1);
    CHECK(g.dims == std::array<std::int64_t, 3>{1, 1, 1});
    CHECK(g.sorted_ids == std::vector<Index>{0});
}

TEST_CASE("build_grid: unit cube at width 0.3 gives 3x3x3") {
    std::vector<double> x(1000), y(1000), z(1000);
    CounterRng rng(1, 1);
    for (std::size_t i = 0; i < 1000; ++i) {
        x[i] = rng.uniform();
        y[i] = rng.uniform();
        z[i] = rng.uniform();
    }
    const ParticleSet p(x, y, z, DomainBox{{0, 0, 0}, {1, 1, 1}});
    const GridIndex g = build_grid(p, 0.3);
    CHECK(g.dims == std::array<std::int64_t, 3>{3, 3, 3});
    for (int k = 0; k < 3; ++k) CHECK(g.cell_width[k] >= 0.3);
}

TEST_CASE("build_grid: layout invariants and bucket recomputation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ParticleSet p = cgtest::uniform_set(500, seed);
        const double w = 0.02 + 0.03 * static_cast<double>(seed);
        const GridIndex g = build_grid(p, w);
        CHECK(g.cell_count() <= static_cast<std::int64_t>(p.size()));
        for (int k = 0; k < 3; ++k) CHECK(g.cell_width[k] >= w);
        REQUIRE(g.cell_start.size() == static_cast<std::size_t>(g.cell_count()) + 1);
        CHECK(std::is_sorted(g.cell_start.begin(), g.cell_start.end()));
        CHECK(g.cell_start.back() == p.size());
        std::vector<Index> ids = g.sorted_ids;
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == i);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) {
            for (const Index i : g.cell(c)) CHECK(g.cell_id(g.cell_coords(p.point(i))) == c);
        }
    }
}

TEST_CASE("build_grid: cell cap on an anisotropic box") {
    std::vector<double> x, y, z;
    for (int i = 0; i < 50; ++i) {
        x.push_back(i * 0.2);
        y.push_back(0.0);
        z.push_back(0.01 * (i % 2));
    }
    const GridIndex g = build_grid(ParticleSet(x, y, z), 0.05);
    CHECK(g.cell_count() <= 50);
    for (int k = 0; k < 3; ++k) CHECK(g.cell_width[k] >= 0.05);
}

TEST_CASE("build_grid: nonpositive width rejected") {
    CHECK_THROWS(build_grid(cgtest::uniform_set(10, 1), 0.0));
}

TEST_CASE("band boundaries") {
    const double b = 0.1, xi = 0.001;
    SUBCASE("distance exactly b is a linked pair") {
        const ParticleSet p = cgtest::make_set({{0, 0, 0}, {b, 0, 0}});
        const auto v = find_vulnerable_pairs(p, b, xi);
        REQUIRE(v.size() == 1);
        CHECK(v.orig_linked[0] == 1);
        CHECK(v == brute_force_pairs(p, b, xi));
    }
    SUBCASE("lower band edge is open") {
        // Nudge b until b - 2 sqrt(3) xi lands exactly on the representable distance d.
        const double d = 0.09375;
        double bb = d + 2.0 * kSqrt3 * xi;
        for (int step = 0; step < 64 && Band(bb, xi).lower != d; ++step) {
            bb = Band(bb, xi).lower < d ? std::nextafter(bb, 1.0) : std::nextafter(bb, 0.0);
        }
        REQUIRE(Band(bb, xi).lower == d);
        const ParticleSet p = cgtest::make_set({{0, 0, 0}, {d, 0, 0}});
        CHECK(find_vulnerable_pairs(p, bb, xi).empty());
        CHECK(brute_force_pairs(p, bb, xi).empty());
        const ParticleSet q = cgtest::make_set({{0, 0, 0}, {std::nextafter(d, 1.0), 0, 0}});
        CHECK(find_vulnerable_pairs(q, bb, xi).size() == 1);
    }
    SUBCASE("upper band edge is closed") {
        const ParticleSet p = cgtest::make_set({{0, 0, 0}, {b + 2.0 * kSqrt3 * xi, 0, 0}});
        const auto v = find_vulnerable_pairs(p, b, xi);
        CHECK(v == brute_force_pairs(p, b, xi));
    }
    SUBCASE("xi = 0 gives nothing") {
        const ParticleSet p = cgtest::make_set({{0, 0, 0}, {b, 0, 0}});
        CHECK(find_vulnerable_pairs(p, b, 0.0).empty());
    }
}

TEST_CASE("Band classification matches the written inequalities") {
    const Band band(1.0, 0.01);
    const double lo = 1.0 - 2.0 * kSqrt3 * 0.01, hi = 1.0 + 2.0 * kSqrt3 * 0.01;
    CHECK_FALSE(band.contains_sq(lo * lo));
    CHECK(band.contains_sq(hi * hi));
    CHECK(band.contains_sq(1.0));
    CHECK_FALSE(band.contains_sq(std::nextafter(hi * hi, 2.0)));
    CHECK(band.contains_sq(std::nextafter(lo * lo, 2.0)));
}

TEST_CASE("collinear triple spaced b apart") {
    const double b = 0.1, xi = 0.001;
    const ParticleSet p = cgtest::make_set({{0, 0, 0}, {b, 0, 0}, {2 * b, 0, 0}});
    const auto v = brute_force_pairs(p, b, xi);
    REQUIRE(v.size() == 2);
    CHECK(v.pairs[0] == std::array<Index, 2>{0, 1});
    CHECK(v.pairs[1] == std::array<Index, 2>{1, 2});
    CHECK(v.orig_linked == std::vector<std::uint8_t>{1, 1});
    CHECK(v.editable == std::vector<Index>{0, 1, 2});
}

TEST_CASE("degenerate sizes") {
    CHECK(brute_force_pairs(ParticleSet(), 0.1, 0.01).empty());
    CHECK(find_vulnerable_pairs(ParticleSet(), 0.1, 0.01).empty());
    const auto one = find_vulnerable_pairs(cgtest::make_set({{0, 0, 0}}), 0.1, 0.01);
    CHECK(one.empty());
    CHECK(one.editable.empty());
}

TEST_CASE("brute force guard") {
    CHECK_THROWS_AS(brute_force_pairs(cgtest::uniform_set(11, 1), 0.1, 0.01, 10), std::length_error);
}

TEST_CASE("grid detection equals brute force on random sets") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const ParticleSet p = cgtest::uniform_set(500, 100 + seed);
        const auto grid = find_vulnerable_pairs(p, 0.08, 0.004);
        CHECK(grid == brute_force_pairs(p, 0.08, 0.004));
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ParticleSet p = gen_synthetic({SynthKind::clustered, 1000, 3, 0.03, 0.2, seed});
        const double b = linking_length(0.2, 1.0, p.size());
        const auto grid = find_vulnerable_pairs(p, b, 0.02 * b);
        CHECK(grid == brute_force_pairs(p, b, 0.02 * b));
    }
}

TEST_CASE("pair set invariants") {
    const ParticleSet p = cgtest::uniform_set(800, 5);
    const double b = 0.07, xi = 0.003;
    const Band band(b, xi);
    const auto v = find_vulnerable_pairs(p, b, xi);
    std::set<std::array<Index, 2>> seen;
    std::set<Index> ends;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const auto [i, j] = v.pairs[k];
        CHECK(i < j);
        CHECK(seen.insert(v.pairs[k]).second);
        const double d2 = squared_distance(p, i, j);
        CHECK(band.contains_sq(d2));
        CHECK((v.orig_linked[k] == 1) == (d2 <= b * b));
        ends.insert(i);
        ends.insert(j);
    }
    CHECK(std::vector<Index>(ends.begin(), ends.end()) == v.editable);
}

TEST_CASE("band nesting in xi") {
    const ParticleSet p = cgtest::uniform_set(1000, 8);
    VulnerablePairSet prev = find_vulnerable_pairs(p, 0.06, 1e-5);
    for (const double xi : {1e-4, 1e-3, 3e-3, 1e-2}) {
        const VulnerablePairSet next = find_vulnerable_pairs(p, 0.06, xi);
        CHECK(is_subset(prev, next));
        prev = next;
    }
}

TEST_CASE("permutation invariance") {
    const ParticleSet p = cgtest::uniform_set(600, 21);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::vector<double> x, y, z;
    for (const auto i : perm) {
        x.push_back(p.xs()[i]);
        y.push_back(p.ys()[i]);
        z.push_back(p.zs()[i]);
    }
    const ParticleSet q(x, y, z);
    const auto a = find_vulnerable_pairs(p, 0.07, 0.003);
    const auto b = find_vulnerable_pairs(q, 0.07, 0.003);
    REQUIRE(a.size() == b.size());
    std::set<std::pair<std::array<Index, 2>, int>> mapped;
    const Index n = static_cast<Index>(p.size());
    for (std::size_t k = 0; k < b.size(); ++k) {
        const Index i = n - 1 - b.pairs[k][0], j = n - 1 - b.pairs[k][1];
        mapped.insert({{std::min(i, j), std::max(i, j)}, b.orig_linked[k]});
    }
    std::set<std::pair<std::array<Index, 2>, int>> direct;
    for (std::size_t k = 0; k < a.size(); ++k) direct.insert({a.pairs[k], a.orig_linked[k]});
    CHECK(mapped == direct);
}

TEST_CASE("output does not depend on the worker count") {
    const ParticleSet p = gen_synthetic({SynthKind::clustered, 20000, 8, 0.02, 0.2, 4});
    const double b = linking_length(0.2, 1.0, p.size());
    const auto many = find_vulnerable_pairs(p, b, 1e-4);
    set_max_threads(1);
    const auto one = find_vulnerable_pairs(p, b, 1e-4);
    set_max_threads(3);
    const auto three = find_vulnerable_pairs(p, b, 1e-4);
    set_max_threads(0);
    CHECK(many == one);
    CHECK(three == one);
}

TEST_CASE("candidate enumeration visits each close pair exactly once") {
    const ParticleSet p = cgtest::uniform_set(400, 13);
    const double w = 0.1;
    const GridIndex g = build_grid(p, w);
    std::set<std::pair<Index, Index>> seen;
    std::size_t visits = 0;
    for_each_candidate_pair(g, p, 0, g.cell_count(), [&](Index i, Index j, double d2) {
        if (d2 > w * w) return;
        ++visits;
        seen.insert({std::min(i, j), std::max(i, j)});
    });
    CHECK(visits == seen.size());
    std::size_t expected = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) expected += squared_distance(p, i, j) <= w * w;
    }
    CHECK(seen.size() == expected);
}
