#include "clusterguard/edit_codec.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace clusterguard {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'G', 'E', 'L'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t pos, int bytes) {
    if (pos + static_cast<std::size_t>(bytes) > in.size()) throw FormatError("edit log truncated");
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(in[pos + k]) << (8 * k);
    return v;
}

std::vector<std::uint8_t> stage2_compress(const std::vector<std::uint8_t>& raw, Stage2 codec) {
    std::vector<std::uint8_t> out;
    if (raw.empty()) {
        out.push_back(static_cast<std::uint8_t>(Stage2::stored));
        return out;
    }
    out.push_back(static_cast<std::uint8_t>(codec));
    if (codec == Stage2::stored) {
        out.insert(out.end(), raw.begin(), raw.end());
        return out;
    }
    put_u64(out, raw.size());
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(bound);
    if (compress2(z.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw std::runtime_error("deflate failed");
    }
    out.insert(out.end(), z.begin(), z.begin() + static_cast<std::ptrdiff_t>(bound));
    return out;
}

std::vector<std::uint8_t> stage2_decompress(std::span<const std::uint8_t> block, Stage2& codec) {
    if (block.empty()) throw FormatError("edit log block missing codec id");
    const std::uint8_t id = block[0];
    const auto payload = block.subspan(1);
    if (id == static_cast<std::uint8_t>(Stage2::stored)) {
        codec = Stage2::stored;
        return {payload.begin(), payload.end()};
    }
    if (id != static_cast<std::uint8_t>(Stage2::deflate)) throw FormatError("unknown codec id " + std::to_string(id));
    codec = Stage2::deflate;
    const std::uint64_t raw_size = get_le(payload, 0, 8);
    if (raw_size == 0) throw FormatError("deflate block with empty content");
    // Deflate cannot expand data by more than ~1032x; reject absurd sizes before allocating.
    if (raw_size > 1100 * static_cast<std::uint64_t>(payload.size())) throw FormatError("deflate size implausible");
    std::vector<std::uint8_t> raw(raw_size);
    uLongf out_len = static_cast<uLongf>(raw_size);
    const auto z = payload.subspan(8);
    if (uncompress(raw.data(), &out_len, z.data(), static_cast<uLong>(z.size())) != Z_OK || out_len != raw_size) {
        throw FormatError("deflate block corrupt");
    }
    // Re-compress to confirm canonical form (same zlib, same level).
    if (stage2_compress(raw, Stage2::deflate) != std::vector<std::uint8_t>(block.begin(), block.end())) {
        throw FormatError("deflate block is not in canonical form");
    }
    return raw;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong c = ::crc32(0L, Z_NULL, 0);
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
        c = ::crc32(c, bytes.data() + pos, static_cast<uInt>(chunk));
        pos += chunk;
    }
    return static_cast<std::uint32_t>(c);
}

Compacted compact(std::span<const double> delta, std::size_t n) {
    if (delta.size() != 3 * n) throw std::invalid_argument("compact: delta length must be 3N");
    Compacted c;
    c.flags.assign((3 * n + 7) / 8, 0);
    for (std::size_t k = 0; k < delta.size(); ++k) {
        if (delta[k] != 0.0) {
            c.flags[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
            c.values.push_back(delta[k]);
        }
    }
    return c;
}

std::vector<double> scatter(std::span<const std::uint8_t> flags, std::span<const double> values, std::size_t n) {
    if (flags.size() != (3 * n + 7) / 8) throw std::invalid_argument("scatter: flag mask has the wrong length");
    std::vector<double> out(3 * n, 0.0);
    std::size_t next = 0;
    for (std::size_t k = 0; k < 3 * n; ++k) {
        if (!flag_set(flags, k)) continue;
        if (next >= values.size()) throw std::invalid_argument("scatter: fewer values than set flags");
        out[k] = values[next++];
    }
    if (next != values.size()) throw std::invalid_argument("scatter: more values than set flags");
    return out;
}

std::size_t popcount(std::span<const std::uint8_t> flags) {
    std::size_t n = 0;
    for (const auto f : flags) n += static_cast<std::size_t>(std::popcount(f));
    return n;
}

double quant_step(double xi, int m) { return std::ldexp(xi, 1 - m); }

std::vector<std::int64_t> quantize(std::span<const double> values, double xi, int m) {
    const double s = quant_step(xi, m);
    std::vector<std::int64_t> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(std::abs(values[k]) <= 2.0 * xi)) throw DataError("edit value outside [-2 xi, 2 xi]");
        out[k] = static_cast<std::int64_t>(std::nearbyint(values[k] / s));
    }
    return out;
}

std::vector<double> dequantize(std::span<const std::int64_t> indices, double xi, int m) {
    const double s = quant_step(xi, m);
    std::vector<double> out(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) out[k] = static_cast<double>(indices[k]) * s;
    return out;
}

std::vector<std::uint8_t> encode(const EditLog& log) {
    const EditHeader& h = log.header;
    if (log.flags.size() != (3 * h.n + 7) / 8) throw std::invalid_argument("encode: flag mask has the wrong length");
    if (popcount(log.flags) != h.n_edits || log.qvals.size() != h.n_edits) {
        throw std::invalid_argument("encode: n_edits disagrees with flags or values");
    }

    std::vector<std::uint8_t> blocks;
    for (int which = 0; which < 2; ++which) {
        std::vector<std::uint8_t> stage1;
        if (h.n_edits > 0) {
            if (which == 0) {
                const std::vector<std::int64_t> bytes(log.flags.begin(), log.flags.end());
                stage1 = huffman::encode(bytes);
            } else {
                stage1 = huffman::encode(log.qvals);
            }
        }
        const auto block = stage2_compress(stage1, which == 0 ? log.flags_stage2 : log.values_stage2);
        put_u32(blocks, static_cast<std::uint32_t>(block.size()));
        blocks.insert(blocks.end(), block.begin(), block.end());
    }

    std::vector<std::uint8_t> out;
    out.reserve(kEditHeaderSize + blocks.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u16(out, static_cast<std::uint16_t>(kEditLogVersion));
    out.push_back(static_cast<std::uint8_t>(h.m));
    out.push_back(0);
    put_u64(out, h.n);
    put_u64(out, std::bit_cast<std::uint64_t>(h.xi));
    put_u64(out, std::bit_cast<std::uint64_t>(h.b));
    put_u64(out, h.n_edits);
    put_u32(out, crc32(blocks));
    out.insert(out.end(), blocks.begin(), blocks.end());
    return out;
}

EditLog decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kEditHeaderSize) throw FormatError("edit log truncated (header)");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not an edit log (bad magic)");
    if (get_le(bytes, 4, 2) != kEditLogVersion) throw FormatError("unsupported edit log version");
    if (bytes[7] != 0) throw FormatError("reserved header byte is nonzero");

    EditLog log;
    EditHeader& h = log.header;
    h.m = bytes[6];
    h.n = get_le(bytes, 8, 8);
    h.xi = std::bit_cast<double>(get_le(bytes, 16, 8));
    h.b = std::bit_cast<double>(get_le(bytes, 24, 8));
    h.n_edits = get_le(bytes, 32, 8);
    const auto crc = static_cast<std::uint32_t>(get_le(bytes, 40, 4));
    if (h.m < 2 || h.m > 52) throw FormatError("bit depth out of range");
    if (!(h.xi > 0.0) || !std::isfinite(h.xi)) throw FormatError("bad error bound in header");
    if (h.n > (std::uint64_t{1} << 40)) throw FormatError("particle count implausible");
    if (h.n_edits > 3 * h.n) throw FormatError("more edits than coordinates");

    const auto body = bytes.subspan(kEditHeaderSize);
    if (crc32(body) != crc) throw FormatError("edit log checksum mismatch");

    std::size_t pos = 0;
    std::vector<std::uint8_t> stage1[2];
    Stage2 codecs[2] = {Stage2::stored, Stage2::stored};
    for (int which = 0; which < 2; ++which) {
        const std::uint64_t len = get_le(body, pos, 4);
        pos += 4;
        if (pos + len > body.size()) throw FormatError("edit log truncated (block)");
        stage1[which] = stage2_decompress(body.subspan(pos, len), codecs[which]);
        pos += len;
    }
    if (pos != body.size()) throw FormatError("trailing bytes after edit log blocks");

    const std::size_t flag_bytes = (3 * h.n + 7) / 8;
    if (h.n_edits == 0) {
        if (!stage1[0].empty() || !stage1[1].empty()) throw FormatError("empty edit log carries block data");
        log.flags.assign(flag_bytes, 0);
        log.flags_stage2 = log.values_stage2 = Stage2::deflate;
        return log;
    }
    if (stage1[0].empty() || stage1[1].empty()) throw FormatError("edit log block missing");
    log.flags_stage2 = codecs[0];
    log.values_stage2 = codecs[1];

    const auto flag_symbols = huffman::decode(stage1[0]);
    if (flag_symbols.size() != flag_bytes) throw FormatError("flag mask has the wrong length");
    log.flags.resize(flag_bytes);
    for (std::size_t k = 0; k < flag_bytes; ++k) {
        if (flag_symbols[k] < 0 || flag_symbols[k] > 255) throw FormatError("flag byte out of range");
        log.flags[k] = static_cast<std::uint8_t>(flag_symbols[k]);
    }
    if ((3 * h.n) % 8 != 0 && (log.flags.back() >> ((3 * h.n) % 8)) != 0) {
        throw FormatError("flag padding bits are set");
    }
    if (popcount(log.flags) != h.n_edits) throw FormatError("flag count disagrees with header");

    log.qvals = huffman::decode(stage1[1]);
    if (log.qvals.size() != h.n_edits) throw FormatError("value count disagrees with header");
    const std::int64_t limit = std::int64_t{1} << h.m;
    for (const auto q : log.qvals) {
        if (q < -limit || q > limit) throw FormatError("quantization index exceeds 2 xi");
    }
    return log;
}

ParticleSet apply_edits(const ParticleSet& p_hat0, const EditLog& log, Precision precision) {
    if (log.header.n != p_hat0.size()) throw DataError("edit log particle count does not match the data");
    std::vector<double> coords = p_hat0.interleaved();
    const double s = quant_step(log.header.xi, log.header.m);
    std::size_t next = 0;
    for (std::size_t k = 0; k < coords.size(); ++k) {
        if (!flag_set(log.flags, k)) continue;
        coords[k] = round_to(precision, coords[k] + static_cast<double>(log.qvals[next++]) * s);
    }
    return ParticleSet::from_interleaved(coords);
}

EditLogBuild make_edit_log(const ParticleSet& p_orig, const ParticleSet& p_hat0, std::span<const double> delta,
                           double xi, double b, int m, Precision precision, Stage2 stage2) {
    const std::size_t n = p_hat0.size();
    if (p_orig.size() != n) throw DataError("original and decompressed particle counts differ");
    Compacted c = compact(delta, n);

    EditLogBuild out;
    out.log.header = {n, m, xi, b, c.values.size()};
    out.log.flags = std::move(c.flags);
    out.log.qvals = quantize(c.values, xi, m);
    out.log.flags_stage2 = out.log.values_stage2 = stage2;

    const std::vector<double> orig = p_orig.interleaved();
    const std::vector<double> start = p_hat0.interleaved();
    const double s = quant_step(xi, m);
    const std::int64_t limit = std::int64_t{1} << m;
    std::size_t next = 0;
    for (std::size_t k = 0; k < 3 * n; ++k) {
        if (!flag_set(out.log.flags, k)) continue;
        std::int64_t& q = out.log.qvals[next++];
        auto error = [&](std::int64_t idx) { return round_to(precision, start[k] + static_cast<double>(idx) * s) - orig[k]; };
        const double e = error(q);
        if (std::abs(e) <= xi) continue;
        const std::int64_t moved = e > 0 ? q - 1 : q + 1;
        if (moved >= -limit && moved <= limit && std::abs(error(moved)) <= xi) {
            q = moved;
            ++out.adjusted;
        } else {
            ++out.unresolved;
        }
    }
    return out;
}

}  // namespace clusterguard
