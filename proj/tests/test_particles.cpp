#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "clusterguard/fof.hpp"
#include "clusterguard/parallel.hpp"
#include "clusterguard/particles.hpp"
#include "support.hpp"

using namespace clusterguard;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "clusterguard_particles";
    fs::create_directories(dir);
    return dir / name;
}

void write_blob(const fs::path& p, std::size_t bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    const std::vector<char> zeros(bytes, 0);
    out.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
}

}  // namespace

TEST_CASE("load_raw_f32 counts four-byte values") {
    const auto x = scratch("a.x"), y = scratch("a.y"), z = scratch("a.z");
    write_blob(x, 16);
    write_blob(y, 16);
    write_blob(z, 16);
    const ParticleSet p = load_raw_f32(x, y, z);
    CHECK(p.size() == 4);
}

TEST_CASE("load_raw_f32 rejects length mismatch") {
    const auto x = scratch("b.x"), y = scratch("b.y"), z = scratch("b.z");
    write_blob(x, 16);
    write_blob(y, 12);
    write_blob(z, 16);
    CHECK_THROWS_AS(load_raw_f32(x, y, z), DataError);
}

TEST_CASE("empty files give an empty set with a degenerate box") {
    const auto x = scratch("c.x"), y = scratch("c.y"), z = scratch("c.z");
    write_blob(x, 0);
    write_blob(y, 0);
    write_blob(z, 0);
    const ParticleSet p = load_raw_f32(x, y, z);
    CHECK(p.size() == 0);
    CHECK(p.bbox().volume() == 0.0);
}

TEST_CASE("non-finite coordinates are rejected") {
    CHECK_THROWS_AS(ParticleSet({0.0, NAN}, {0.0, 0.0}, {0.0, 0.0}), DataError);
    CHECK_THROWS_AS(ParticleSet({0.0}, {INFINITY}, {0.0}), DataError);
    CHECK_THROWS_AS(ParticleSet({0.0, 1.0}, {0.0}, {0.0, 1.0}), DataError);
}

TEST_CASE("a supplied box must contain the particles") {
    DomainBox box{{0, 0, 0}, {1, 1, 1}};
    CHECK_NOTHROW(ParticleSet({0.0, 1.0}, {0.5, 0.5}, {0.0, 1.0}, box));
    CHECK_THROWS_AS(ParticleSet({1.5}, {0.5}, {0.5}, box), DataError);
}

TEST_CASE("raw files round-trip byte-exactly") {
    const ParticleSet p = gen_synthetic({SynthKind::uniform, 257, 1, 0.01, 0.0, 11});
    const std::string prefix = scratch("rt").string();
    save_dataset(prefix, p);
    const ParticleSet q = load_dataset(prefix);
    CHECK(q.xs() == p.xs());
    CHECK(q.ys() == p.ys());
    CHECK(q.zs() == p.zs());
    CHECK(q.bbox() == p.bbox());

    const auto paths = DatasetPaths::from_prefix(prefix);
    std::ifstream in(paths.x, std::ios::binary);
    const std::vector<char> first((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    save_dataset(scratch("rt2").string(), q);
    std::ifstream in2(DatasetPaths::from_prefix(scratch("rt2").string()).x, std::ios::binary);
    const std::vector<char> second((std::istreambuf_iterator<char>(in2)), std::istreambuf_iterator<char>());
    CHECK(first == second);
    CHECK(first.size() == 257 * 4);
}

TEST_CASE("gen_synthetic uniform stays in the half-open unit cube and is repeatable") {
    const SynthSpec spec{SynthKind::uniform, 1000, 1, 0.01, 0.0, 7};
    const ParticleSet a = gen_synthetic(spec);
    const ParticleSet b = gen_synthetic(spec);
    CHECK(a == b);
    REQUIRE(a.size() == 1000);
    for (int k = 0; k < 3; ++k) {
        for (const double v : a.axis(k)) {
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
            CHECK(static_cast<double>(static_cast<float>(v)) == v);
        }
    }
    CHECK(a.bbox() == DomainBox{{0, 0, 0}, {1, 1, 1}});
}

TEST_CASE("gen_synthetic clustered keeps the count and forms clusters") {
    const ParticleSet a = gen_synthetic({SynthKind::clustered, 1000, 5, 0.01, 0.0, 3});
    CHECK(a.size() == 1000);

    const ParticleSet two = gen_synthetic({SynthKind::clustered, 400, 2, 0.01, 0.0, 5});
    const FofLabels labels = fof_components(two, 0.05);
    std::size_t big = 0;
    for (const auto s : component_sizes(labels)) big += s > 1;
    CHECK(big >= 2);
}

TEST_CASE("gen_synthetic is independent of the thread cap") {
    const SynthSpec spec{SynthKind::clustered, 5000, 4, 0.02, 0.3, 9};
    const ParticleSet a = gen_synthetic(spec);
    set_max_threads(1);
    const ParticleSet b = gen_synthetic(spec);
    set_max_threads(0);
    CHECK(a == b);
}

TEST_CASE("SynthSpec validation") {
    CHECK_THROWS_AS(gen_synthetic({SynthKind::clustered, 10, 1, 0.0, 0.0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(gen_synthetic({SynthKind::clustered, 10, 1, 0.1, 1.5, 1}), std::invalid_argument);
    CHECK(gen_synthetic({SynthKind::uniform, 0, 1, 0.1, 0.0, 1}).size() == 0);
}

TEST_CASE("linking_length") {
    CHECK(linking_length(0.2, 1.0, 1'000'000) == doctest::Approx(0.002).epsilon(1e-14));
    CHECK(linking_length(0.2, 8.0, 8) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(linking_length(kDefaultEta, 1.0, 1) == doctest::Approx(0.2));
    // Scaling the volume by s^3 scales b by s.
    CHECK(linking_length(0.2, 27.0, 1000) == doctest::Approx(3.0 * linking_length(0.2, 1.0, 1000)));
    CHECK(linking_length(0.5, 4.0, 4, 2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(linking_length(0.2, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(linking_length(0.2, 0.0, 10), std::invalid_argument);
}

TEST_CASE("absolute_bound uses the global range across axes") {
    const ParticleSet p = cgtest::make_set({{0, 0, 0}, {2, 4, 1}});
    CHECK(absolute_bound(1e-3, p) == doctest::Approx(4e-3));
}

TEST_CASE("metadata sidecar") {
    const auto path = scratch("m.meta");
    write_metadata(path, {12, {{-1, 0, 0.5}, {1, 2, 3.25}}});
    const Metadata m = read_metadata(path);
    CHECK(m.n == 12);
    CHECK(m.bbox == DomainBox{{-1, 0, 0.5}, {1, 2, 3.25}});
}

TEST_CASE("interleaved round trip") {
    const ParticleSet p = cgtest::uniform_set(50, 4);
    CHECK(ParticleSet::from_interleaved(p.interleaved()) == p);
}
