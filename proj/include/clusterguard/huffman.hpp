#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace clusterguard {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace huffman {

inline constexpr int kMaxCodeLength = 32;

/// Code lengths for each distinct symbol (ascending by symbol value).
struct CodeTable {
    std::vector<std::int64_t> symbols;
    std::vector<std::uint8_t> lengths;
};

/// Length-limited Huffman code lengths from symbol frequencies (symbols ascending).
std::vector<std::uint8_t> code_lengths(std::span<const std::uint64_t> freqs, int max_length = kMaxCodeLength);

/// Canonical prefix code over 64-bit signed symbols.
///
/// Layout: varint(value count), varint(distinct count), then per distinct symbol in ascending
/// order a varint (zigzag value for the first symbol, unsigned gap to the previous one after) and
/// one length byte, then the code bits MSB-first, zero-padded to a byte. An empty sequence encodes to zero bytes.
std::vector<std::uint8_t> encode(std::span<const std::int64_t> values);
std::vector<std::int64_t> decode(std::span<const std::uint8_t> bytes);

}  // namespace huffman

// Little-endian / varint helpers shared by the container code.
void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint64_t get_varint(std::span<const std::uint8_t> in, std::size_t& pos);
inline std::uint64_t zigzag(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) { return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1); }

}  // namespace clusterguard
