#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clusterguard/base_quantizer.hpp"
#include "clusterguard/huffman.hpp"
#include "clusterguard/particles.hpp"

namespace clusterguard {

/// Second-stage compressor applied to each entropy-coded block.
enum class Stage2 : std::uint8_t { stored = 0, deflate = 1 };

inline constexpr std::uint32_t kEditLogVersion = 1;
inline constexpr std::size_t kEditHeaderSize = 44;

struct EditHeader {
    std::uint64_t n = 0;
    int m = 16;
    double xi = 0.0;
    double b = 0.0;
    std::uint64_t n_edits = 0;

    friend bool operator==(const EditHeader&, const EditHeader&) = default;
};

/// Quantized corrections: a 3N-bit mask over interleaved coordinates plus one index per set bit.
struct EditLog {
    EditHeader header;
    std::vector<std::uint8_t> flags;  // ceil(3N / 8) bytes, LSB-first
    std::vector<std::int64_t> qvals;  // in flag order
    Stage2 flags_stage2 = Stage2::deflate;
    Stage2 values_stage2 = Stage2::deflate;

    friend bool operator==(const EditLog&, const EditLog&) = default;
};

struct Compacted {
    std::vector<std::uint8_t> flags;
    std::vector<double> values;
};

/// Flags bit k is set iff delta[k] != 0; values keep those entries in ascending k.
Compacted compact(std::span<const double> delta, std::size_t n);
/// Inverse of compact.
std::vector<double> scatter(std::span<const std::uint8_t> flags, std::span<const double> values, std::size_t n);

inline bool flag_set(std::span<const std::uint8_t> flags, std::size_t k) { return (flags[k / 8] >> (k % 8)) & 1u; }
std::size_t popcount(std::span<const std::uint8_t> flags);

/// Lattice step xi * 2^(1 - m); round-half-even quantization error is at most xi * 2^-m.
double quant_step(double xi, int m);
/// Throws DataError when a value lies outside [-2 xi, 2 xi].
std::vector<std::int64_t> quantize(std::span<const double> values, double xi, int m);
std::vector<double> dequantize(std::span<const std::int64_t> indices, double xi, int m);

std::vector<std::uint8_t> encode(const EditLog& log);
/// Throws FormatError on a bad magic/version, truncation, checksum mismatch, unknown codec id,
/// or any non-canonical content.
EditLog decode(std::span<const std::uint8_t> bytes);

/// p_hat0 + scatter(dequantize(qvals)), rounded to `precision`.
ParticleSet apply_edits(const ParticleSet& p_hat0, const EditLog& log, Precision precision = Precision::f64);

struct EditLogBuild {
    EditLog log;
    /// Indices moved one lattice step toward the original because the rounded reconstruction
    /// sat outside the bound.
    std::size_t adjusted = 0;
    /// Coordinates whose reconstruction still breaks the bound (should stay 0).
    std::size_t unresolved = 0;
};

/// Compacts and quantizes a dense edit array, guaranteeing |reconstruction - original| <= xi
/// at the requested precision wherever a lattice neighbour allows it.
EditLogBuild make_edit_log(const ParticleSet& p_orig, const ParticleSet& p_hat0, std::span<const double> delta,
                           double xi, double b, int m, Precision precision = Precision::f64,
                           Stage2 stage2 = Stage2::deflate);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace clusterguard
