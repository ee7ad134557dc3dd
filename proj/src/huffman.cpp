#include "clusterguard/huffman.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <tuple>

namespace clusterguard {

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint64_t get_varint(std::span<const std::uint8_t> in, std::size_t& pos) {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        if (pos >= in.size()) throw FormatError("truncated varint");
        const std::uint8_t byte = in[pos++];
        v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
        if (!(byte & 0x80)) {
            if (byte == 0 && shift > 0) throw FormatError("non-minimal varint");
            return v;
        }
    }
    throw FormatError("varint too long");
}

namespace huffman {

namespace {

std::vector<std::uint8_t> unlimited_lengths(std::span<const std::uint64_t> freqs) {
    const std::size_t n = freqs.size();
    std::vector<std::uint8_t> lengths(n, 0);
    if (n == 1) {
        lengths[0] = 1;
        return lengths;
    }
    // Node ids: leaves 0..n-1, internal nodes after. Ties break on the smaller id.
    using Item = std::tuple<std::uint64_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<std::size_t> parent(2 * n - 1, 0);
    for (std::size_t i = 0; i < n; ++i) heap.emplace(freqs[i], i);
    std::size_t next = n;
    while (heap.size() > 1) {
        const auto [fa, a] = heap.top();
        heap.pop();
        const auto [fb, b] = heap.top();
        heap.pop();
        parent[a] = parent[b] = next;
        heap.emplace(fa + fb, next++);
    }
    const std::size_t root = next - 1;
    std::vector<std::uint32_t> depth(2 * n - 1, 0);
    for (std::size_t node = root; node-- > 0;) depth[node] = depth[parent[node]] + 1;
    for (std::size_t i = 0; i < n; ++i) lengths[i] = static_cast<std::uint8_t>(std::min<std::uint32_t>(depth[i], 255));
    return lengths;
}

struct Canonical {
    std::vector<std::uint64_t> codes;  // per symbol index
};

Canonical assign_codes(const std::vector<std::uint8_t>& lengths) {
    std::vector<std::size_t> order(lengths.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
    Canonical c;
    c.codes.assign(lengths.size(), 0);
    std::uint64_t code = 0;
    int prev_len = lengths.empty() ? 0 : lengths[order[0]];
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int len = lengths[order[k]];
        if (k > 0) code = (code + 1) << (len - prev_len);
        c.codes[order[k]] = code;
        prev_len = len;
    }
    return c;
}

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
    void put(std::uint64_t code, int len) {
        for (int b = len - 1; b >= 0; --b) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((code >> b) & 1u));
            if (++fill_ == 8) {
                out_.push_back(acc_);
                acc_ = 0;
                fill_ = 0;
            }
        }
    }
    void flush() {
        if (fill_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
        acc_ = 0;
        fill_ = 0;
    }

private:
    std::vector<std::uint8_t>& out_;
    std::uint8_t acc_ = 0;
    int fill_ = 0;
};

}  // namespace

std::vector<std::uint8_t> code_lengths(std::span<const std::uint64_t> freqs, int max_length) {
    std::vector<std::uint64_t> f(freqs.begin(), freqs.end());
    for (;;) {
        auto lengths = unlimited_lengths(f);
        if (lengths.empty() || *std::max_element(lengths.begin(), lengths.end()) <= max_length) return lengths;
        // Flatten the distribution and retry; converges because equal weights give depth log2(n).
        for (auto& v : f) v = (v >> 1) | 1;
    }
}

std::vector<std::uint8_t> encode(std::span<const std::int64_t> values) {
    std::vector<std::uint8_t> out;
    if (values.empty()) return out;

    std::map<std::int64_t, std::uint64_t> freq;
    for (const auto v : values) ++freq[v];
    std::vector<std::int64_t> symbols;
    std::vector<std::uint64_t> counts;
    for (const auto& [s, c] : freq) {
        symbols.push_back(s);
        counts.push_back(c);
    }
    const auto lengths = code_lengths(counts);
    const Canonical canon = assign_codes(lengths);

    put_varint(out, values.size());
    put_varint(out, symbols.size());
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        if (k == 0) {
            put_varint(out, zigzag(symbols[0]));
        } else {
            put_varint(out, static_cast<std::uint64_t>(symbols[k]) - static_cast<std::uint64_t>(symbols[k - 1]));
        }
        out.push_back(lengths[k]);
    }
    BitWriter bits(out);
    for (const auto v : values) {
        const auto k = static_cast<std::size_t>(std::lower_bound(symbols.begin(), symbols.end(), v) - symbols.begin());
        bits.put(canon.codes[k], lengths[k]);
    }
    bits.flush();
    return out;
}

std::vector<std::int64_t> decode(std::span<const std::uint8_t> bytes) {
    std::vector<std::int64_t> values;
    if (bytes.empty()) return values;

    std::size_t pos = 0;
    const std::uint64_t count = get_varint(bytes, pos);
    const std::uint64_t distinct = get_varint(bytes, pos);
    if (count == 0 || distinct == 0 || distinct > count) throw FormatError("huffman: bad symbol counts");
    if (count > 8 * static_cast<std::uint64_t>(bytes.size())) throw FormatError("huffman: value count exceeds payload");
    if (distinct > bytes.size()) throw FormatError("huffman: symbol table exceeds payload");

    std::vector<std::int64_t> symbols(distinct);
    std::vector<std::uint8_t> lengths(distinct);
    for (std::uint64_t k = 0; k < distinct; ++k) {
        const std::uint64_t raw = get_varint(bytes, pos);
        if (k == 0) {
            symbols[0] = unzigzag(raw);
        } else {
            if (raw == 0) throw FormatError("huffman: symbols not strictly ascending");
            const std::uint64_t next = static_cast<std::uint64_t>(symbols[k - 1]) + raw;
            if (static_cast<std::int64_t>(next) <= symbols[k - 1]) throw FormatError("huffman: symbol overflow");
            symbols[k] = static_cast<std::int64_t>(next);
        }
        if (pos >= bytes.size()) throw FormatError("huffman: truncated symbol table");
        lengths[k] = bytes[pos++];
        if (lengths[k] < 1 || lengths[k] > kMaxCodeLength) throw FormatError("huffman: bad code length");
    }
    // Kraft inequality in units of 2^-kMaxCodeLength.
    std::uint64_t kraft = 0;
    for (const auto l : lengths) kraft += std::uint64_t{1} << (kMaxCodeLength - l);
    if (kraft > (std::uint64_t{1} << kMaxCodeLength)) throw FormatError("huffman: code lengths oversubscribed");

    // Canonical decode tables: symbols ordered by (length, value).
    std::vector<std::size_t> order(distinct);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
    std::uint64_t count_at[kMaxCodeLength + 1] = {};
    for (const auto l : lengths) ++count_at[l];
    std::uint64_t first_code[kMaxCodeLength + 2] = {};
    std::uint64_t first_index[kMaxCodeLength + 2] = {};
    {
        std::uint64_t code = 0, index = 0;
        for (int len = 1; len <= kMaxCodeLength; ++len) {
            code = (code + count_at[len - 1]) << 1;
            first_code[len] = code;
            first_index[len] = index;
            index += count_at[len];
        }
    }

    values.reserve(count);
    std::uint64_t code = 0;
    int len = 0;
    std::size_t bitpos = 0;
    const std::size_t total_bits = 8 * (bytes.size() - pos);
    while (values.size() < count) {
        if (bitpos >= total_bits) throw FormatError("huffman: truncated bitstream");
        const std::uint8_t byte = bytes[pos + bitpos / 8];
        code = (code << 1) | ((byte >> (7 - bitpos % 8)) & 1u);
        ++bitpos;
        if (++len > kMaxCodeLength) throw FormatError("huffman: invalid code");
        if (code - first_code[len] < count_at[len] && code >= first_code[len]) {
            values.push_back(symbols[order[first_index[len] + (code - first_code[len])]]);
            code = 0;
            len = 0;
        }
    }
    if ((bitpos + 7) / 8 != total_bits / 8) throw FormatError("huffman: trailing bytes after bitstream");
    // Only the lengths this encoder would choose are accepted, so every accepted stream re-encodes identically.
    {
        std::vector<std::uint64_t> freq(distinct, 0);
        for (const auto v : values) ++freq[static_cast<std::size_t>(std::lower_bound(symbols.begin(), symbols.end(), v) - symbols.begin())];
        if (std::find(freq.begin(), freq.end(), 0) != freq.end() || code_lengths(freq) != lengths) {
            throw FormatError("huffman: non-canonical code table");
        }
    }
    if (bitpos % 8 != 0) {
        const std::uint8_t last = bytes[pos + bitpos / 8];
        if (last & ((1u << (8 - bitpos % 8)) - 1u)) throw FormatError("huffman: nonzero padding bits");
    }
    return values;
}

}  // namespace huffman
}  // namespace clusterguard
