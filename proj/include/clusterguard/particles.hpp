#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clusterguard {

/// Raised when input data breaks a documented contract (bad lengths, NaN, bound violations).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec3 = std::array<double, 3>;

/// Axis-aligned box; lo <= hi on every axis.
struct DomainBox {
    Vec3 lo{0.0, 0.0, 0.0};
    Vec3 hi{0.0, 0.0, 0.0};

    double extent(int axis) const { return hi[axis] - lo[axis]; }
    double volume() const { return extent(0) * extent(1) * extent(2); }
    bool contains(const Vec3& p) const;
    /// Largest hi - lo spread of coordinate values across all three axes.
    double global_range() const;

    friend bool operator==(const DomainBox&, const DomainBox&) = default;
};

/// Structure-of-arrays particle positions. Coordinates are held in double precision;
/// persisted files are 32-bit.
class ParticleSet {
public:
    ParticleSet() = default;
    /// Validates the arrays (equal lengths, finite) and computes the bbox from the data.
    ParticleSet(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs);
    /// Validates that every coordinate lies within `box`.
    ParticleSet(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs, DomainBox box);

    std::size_t size() const { return xs_.size(); }
    bool empty() const { return xs_.empty(); }

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    const std::vector<double>& zs() const { return zs_; }
    const std::vector<double>& axis(int k) const { return k == 0 ? xs_ : (k == 1 ? ys_ : zs_); }

    Vec3 point(std::size_t i) const { return {xs_[i], ys_[i], zs_[i]}; }
    double coord(std::size_t i, int axis) const { return this->axis(axis)[i]; }

    const DomainBox& bbox() const { return bbox_; }

    /// Interleaved copy (x0, y0, z0, x1, ...), length 3N.
    std::vector<double> interleaved() const;
    /// Builds a set from interleaved coordinates, keeping `box` when every point fits, else the data extents.
    static ParticleSet from_interleaved(const std::vector<double>& coords, const std::optional<DomainBox>& box = {});

    friend bool operator==(const ParticleSet&, const ParticleSet&) = default;

private:
    std::vector<double> xs_, ys_, zs_;
    DomainBox bbox_;
};

/// Tight bounding box of the coordinates; all-zero box for N = 0.
DomainBox bounding_box(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& zs);

/// Smallest box containing both.
DomainBox merge(const DomainBox& a, const DomainBox& b);

/// Converts a range-relative bound to an absolute one using the global coordinate range.
double absolute_bound(double xi_rel, const ParticleSet& p);

// ---------------------------------------------------------------------------
// Raw file IO: one file per axis of little-endian float32 values.

ParticleSet load_raw_f32(const std::filesystem::path& x_path, const std::filesystem::path& y_path,
                         const std::filesystem::path& z_path, const std::optional<DomainBox>& bbox = {});

void write_raw_f32(const ParticleSet& p, const std::filesystem::path& x_path, const std::filesystem::path& y_path,
                   const std::filesystem::path& z_path);

std::vector<float> read_f32_file(const std::filesystem::path& path);
void write_f32_file(const std::filesystem::path& path, const std::vector<double>& values);

/// Rounds every coordinate to the nearest float32 (what the raw writer persists).
ParticleSet round_to_f32(const ParticleSet& p);

/// Dataset stored as `<prefix>.x.f32`, `<prefix>.y.f32`, `<prefix>.z.f32` plus an optional
/// `<prefix>.meta` key/value sidecar with n and the bbox.
struct DatasetPaths {
    std::filesystem::path x, y, z, meta;
    static DatasetPaths from_prefix(const std::string& prefix);
};

struct Metadata {
    std::uint64_t n = 0;
    DomainBox bbox;
};

void write_metadata(const std::filesystem::path& path, const Metadata& meta);
Metadata read_metadata(const std::filesystem::path& path);

/// Loads a dataset by prefix, using the sidecar bbox when present.
ParticleSet load_dataset(const std::string& prefix);
void save_dataset(const std::string& prefix, const ParticleSet& p);

// ---------------------------------------------------------------------------
// Synthetic data.

enum class SynthKind { uniform, clustered };

struct SynthSpec {
    SynthKind kind = SynthKind::uniform;
    std::size_t n = 0;
    std::size_t blobs = 1;
    double sigma = 0.01;  // fraction of the box edge
    double background_fraction = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic particles inside [0, 1)^3, float32-representable so files round-trip.
ParticleSet gen_synthetic(const SynthSpec& spec);

/// Counter-based generator: every draw is a pure function of (seed, stream, counter).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}
    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

/// Mean-separation linking length b = eta * (vol / n)^(1/d).
double linking_length(double eta, double vol, std::size_t n, int d = 3);

inline constexpr double kDefaultEta = 0.2;

}  // namespace clusterguard
