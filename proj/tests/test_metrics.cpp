#include <doctest.h>

#include <cmath>
#include <numeric>

#include "clusterguard/metrics.hpp"
#include "support.hpp"

using namespace clusterguard;

namespace {

HaloCatalog catalog_of(std::vector<std::size_t> sizes) {
    HaloCatalog c;
    c.sizes = std::move(sizes);
    c.min_size = 1;
    return c;
}

HmfResult manual_hmf(std::vector<double> edges, std::vector<double> density) {
    HmfResult h;
    h.bin_edges = std::move(edges);
    h.density = std::move(density);
    h.b_bins = h.density.size();
    h.counts.assign(h.b_bins, 0);
    return h;
}

}  // namespace

TEST_CASE("mcc formula") {
    CHECK(mcc_value({40, 40, 10, 10}) == doctest::Approx(0.6));
    CHECK(mcc_value({0, 0, 5, 7}) == doctest::Approx(-1.0));
    CHECK(mcc_value({5, 7, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("mcc zero-denominator convention") {
    CHECK(mcc_value({}) == 1.0);
    CHECK(mcc_value({10, 0, 0, 0}) == 1.0);
    CHECK(mcc_value({0, 10, 0, 0}) == 1.0);
    CHECK(mcc_value({10, 0, 3, 0}) == 0.0);
    CHECK(mcc_value({0, 10, 0, 2}) == 0.0);
}

TEST_CASE("mcc on real pair sets") {
    const ParticleSet p = cgtest::uniform_set(800, 2);
    const double b = 0.07, xi = 0.003;
    const VulnerablePairSet v = find_vulnerable_pairs(p, b, xi);
    REQUIRE(v.size() > 10);
    CHECK(mcc(v, p, p, b) == 1.0);
    CHECK(violated_pairs(v, p, b) == 0);
    const MccCounts c = mcc_counts(v, p, b);
    CHECK(c.total() == v.size());
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);

    // Swap the link state of every pair by reflecting each distance across b.
    std::vector<double> coords(6 * v.size());
    std::vector<std::array<Index, 2>> pairs;
    std::vector<std::uint8_t> linked;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double d = std::sqrt(squared_distance(p, v.pairs[k][0], v.pairs[k][1]));
        const double flipped = v.orig_linked[k] ? b + (b - d) + 1e-9 : b - (d - b) - 1e-9;
        coords[6 * k + 3] = flipped;
        pairs.push_back({static_cast<Index>(2 * k), static_cast<Index>(2 * k + 1)});
        linked.push_back(v.orig_linked[k]);
    }
    const ParticleSet q = ParticleSet::from_interleaved(coords);
    const VulnerablePairSet w = make_pair_set(pairs, linked);
    CHECK(mcc(w, q, q, b) == doctest::Approx(-1.0));
    CHECK(violated_pairs(w, q, b) == v.size());
}

TEST_CASE("mcc is invariant under relabeling") {
    const ParticleSet p = cgtest::uniform_set(500, 9);
    CounterRng rng(9, 1);
    std::vector<double> noisy = p.interleaved();
    for (double& c : noisy) c += 0.003 * (2 * rng.uniform() - 1);
    const ParticleSet r = ParticleSet::from_interleaved(noisy);
    const double b = 0.07;
    const double base = mcc(find_vulnerable_pairs(p, b, 0.003), p, r, b);

    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::rotate(perm.begin(), perm.begin() + 123, perm.end());
    std::vector<double> pp, rr;
    const auto po = p.interleaved();
    for (const auto i : perm) {
        for (int a = 0; a < 3; ++a) {
            pp.push_back(po[3 * i + a]);
            rr.push_back(noisy[3 * i + a]);
        }
    }
    const ParticleSet p2 = ParticleSet::from_interleaved(pp), r2 = ParticleSet::from_interleaved(rr);
    CHECK(mcc(find_vulnerable_pairs(p2, b, 0.003), p2, r2, b) == doctest::Approx(base).epsilon(1e-15));
    CHECK(base < 1.0);
}

TEST_CASE("hmf: single halo") {
    const HmfResult h = hmf(catalog_of({100}), 8.0, 5);
    REQUIRE(h.density.size() == 5);
    std::size_t occupied = 0;
    for (std::size_t k = 0; k < 5; ++k) {
        if (h.counts[k]) {
            ++occupied;
            CHECK(h.density[k] == doctest::Approx(1.0 / (8.0 * h.bin_width(k))));
        }
    }
    CHECK(occupied == 1);
    CHECK(h.bin_edges.front() < 2.0);
    CHECK(h.bin_edges.back() > 2.0);
}

TEST_CASE("hmf: volume normalization") {
    const HaloCatalog c = catalog_of({20, 25, 40, 100, 400, 1000});
    const HmfResult a = hmf(c, 1.0, 4), b = hmf(c, 2.0, 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(b.density[k] == doctest::Approx(a.density[k] / 2.0));
}

TEST_CASE("hmf: powers of two, one per bin") {
    std::vector<std::size_t> sizes;
    for (int e = 5; e <= 14; ++e) sizes.push_back(std::size_t{1} << e);
    const HmfResult h = hmf(catalog_of(sizes), 1.0, 10);
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(h.counts[k] == 1);
        CHECK(h.density[k] == doctest::Approx(h.density[0]));
    }
}

TEST_CASE("hmf: invariants") {
    const ParticleSet p = gen_synthetic({SynthKind::clustered, 20000, 30, 0.01, 0.2, 5});
    const HaloCatalog cat = halo_catalog(fof_components(p, linking_length(0.2, 1.0, p.size())));
    REQUIRE(!cat.sizes.empty());
    const double vol = 3.0;
    const HmfResult h = hmf(cat, vol, kDefaultHmfBins, 2.5);
    CHECK(h.b_bins == kDefaultHmfBins);
    CHECK(h.bin_edges.size() == kDefaultHmfBins + 1);
    double total = 0.0;
    for (std::size_t k = 0; k < h.b_bins; ++k) {
        CHECK(h.bin_edges[k + 1] > h.bin_edges[k]);
        CHECK(h.density[k] >= 0.0);
        total += h.density[k] * vol * h.bin_width(k);
    }
    CHECK(total == doctest::Approx(static_cast<double>(cat.sizes.size())));
    CHECK(h.bin_edges.front() == doctest::Approx(std::log10(2.5 * static_cast<double>(cat.sizes.back()))));
}

TEST_CASE("hmf: empty catalog and bad arguments") {
    CHECK(hmf(catalog_of({}), 1.0).empty());
    CHECK_THROWS(hmf(catalog_of({5}), 0.0));
    CHECK_THROWS(hmf(catalog_of({5}), 1.0, 0));
}

TEST_CASE("hmf_rel_error") {
    const HmfResult ref = hmf(catalog_of({20, 30, 30, 50, 80, 200, 500, 900}), 1.0, 6);
    SUBCASE("identical") {
        for (const auto& e : hmf_rel_error(ref, ref)) {
            if (e) CHECK(*e == doctest::Approx(0.0));
        }
    }
    SUBCASE("scaled by 1.1") {
        HmfResult t = ref;
        for (double& d : t.density) d *= 1.1;
        for (const auto& e : hmf_rel_error(ref, t)) {
            if (e) CHECK(*e == doctest::Approx(0.1));
        }
    }
    SUBCASE("hand interpolation on three bins") {
        const HmfResult r = manual_hmf({0, 1, 2, 3}, {1, 3, 2});
        // centres 0.5, 1.5, 2.5; test centres 1.0, 2.0, 2.75
        const HmfResult t = manual_hmf({0.5, 1.5, 2.5, 3.0}, {2.2, 2.5, 1.4});
        const auto e = hmf_rel_error(r, t);
        REQUIRE(e.size() == 3);
        CHECK(*e[0] == doctest::Approx(0.2 / 2.0));
        CHECK(*e[1] == doctest::Approx(0.0));
        CHECK(*e[2] == doctest::Approx(0.35 / 1.75));
    }
    SUBCASE("zero reference is undefined") {
        const HmfResult r = manual_hmf({0, 1, 2}, {0, 0});
        const auto e = hmf_rel_error(r, manual_hmf({0, 1, 2}, {1, 1}));
        CHECK_FALSE(e[0].has_value());
        CHECK_FALSE(e[1].has_value());
    }
    SUBCASE("disjoint ranges") {
        CHECK_THROWS_AS(hmf_rel_error(manual_hmf({0, 1}, {1}), manual_hmf({2, 3}, {1})), std::invalid_argument);
    }
}

TEST_CASE("rate_distortion") {
    const ParticleSet p = cgtest::uniform_set(1000, 4);
    SUBCASE("exact reconstruction") {
        const RateDistortion rd = rate_distortion(p, p, 100, 0);
        CHECK(std::isinf(rd.psnr_db));
        CHECK(rd.mse == 0.0);
    }
    SUBCASE("constant offset") {
        const double e = 1e-3;
        std::vector<double> c = p.interleaved();
        for (double& v : c) v += e;
        const RateDistortion rd = rate_distortion(p, ParticleSet::from_interleaved(c), 100, 0);
        CHECK(rd.mse == doctest::Approx(e * e).epsilon(1e-9));
        const double range = p.bbox().global_range();
        CHECK(rd.psnr_db == doctest::Approx(20.0 * std::log10(range / e)).epsilon(1e-9));
    }
    SUBCASE("million particles at 1.5 MB") {
        const ParticleSet big = cgtest::uniform_set(1'000'000, 1);
        const RateDistortion rd = rate_distortion(big, big, 1'400'000, 100'000);
        CHECK(rd.bpp == doctest::Approx(12.0));
        CHECK(rd.ratio == doctest::Approx(8.0));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(rate_distortion(p, cgtest::uniform_set(999, 4), 1, 1), DataError);
        CHECK_THROWS_AS(rate_distortion(ParticleSet(), ParticleSet(), 1, 1), DataError);
    }
}
