#include <doctest.h>

#include <random>

#include "clusterguard/huffman.hpp"

using namespace clusterguard;

namespace {

std::vector<std::int64_t> geometric_values(std::size_t n, std::uint32_t seed, double p = 0.3) {
    std::mt19937_64 gen(seed);
    std::geometric_distribution<int> geo(p);
    std::bernoulli_distribution sign(0.5);
    std::vector<std::int64_t> out(n);
    for (auto& v : out) v = sign(gen) ? geo(gen) : -geo(gen);
    return out;
}

}  // namespace

TEST_CASE("varint and zigzag") {
    for (const std::int64_t v : std::vector<std::int64_t>{0, 1, -1, 63, -64, std::int64_t{1} << 40, INT64_MAX, INT64_MIN}) {
        CHECK(unzigzag(zigzag(v)) == v);
    }
    CHECK(zigzag(0) == 0);
    CHECK(zigzag(-1) == 1);
    CHECK(zigzag(1) == 2);

    std::vector<std::uint8_t> buf;
    const std::uint64_t samples[] = {0, 1, 127, 128, 300, 1ULL << 35, UINT64_MAX};
    for (const auto v : samples) put_varint(buf, v);
    std::size_t pos = 0;
    for (const auto v : samples) CHECK(get_varint(buf, pos) == v);
    CHECK(pos == buf.size());

    std::vector<std::uint8_t> one;
    put_varint(one, 300);
    CHECK(one == std::vector<std::uint8_t>{0xAC, 0x02});
}

TEST_CASE("varint rejects truncation and padding") {
    const std::vector<std::uint8_t> truncated{0x80};
    std::size_t pos = 0;
    CHECK_THROWS_AS(get_varint(truncated, pos), FormatError);
    const std::vector<std::uint8_t> padded{0x81, 0x00};
    pos = 0;
    CHECK_THROWS_AS(get_varint(padded, pos), FormatError);
    const std::vector<std::uint8_t> endless(11, 0xFF);
    pos = 0;
    CHECK_THROWS_AS(get_varint(endless, pos), FormatError);
}

TEST_CASE("code lengths satisfy Kraft and respect the limit") {
    const std::vector<std::uint64_t> freqs{1, 1, 2, 4, 8, 16, 32};
    const auto lengths = huffman::code_lengths(freqs);
    double kraft = 0.0;
    for (const auto l : lengths) kraft += std::ldexp(1.0, -l);
    CHECK(kraft == doctest::Approx(1.0));
    CHECK(lengths.front() >= lengths.back());

    // Fibonacci weights force depth past a small limit.
    std::vector<std::uint64_t> fib{1, 1};
    while (fib.size() < 20) fib.push_back(fib[fib.size() - 1] + fib[fib.size() - 2]);
    const auto limited = huffman::code_lengths(fib, 8);
    kraft = 0.0;
    for (const auto l : limited) {
        CHECK(l <= 8);
        CHECK(l >= 1);
        kraft += std::ldexp(1.0, -l);
    }
    CHECK(kraft <= 1.0);
    CHECK(huffman::code_lengths(std::vector<std::uint64_t>{5}) == std::vector<std::uint8_t>{1});
}

TEST_CASE("round trip on assorted inputs") {
    CHECK(huffman::encode(std::vector<std::int64_t>{}).empty());
    CHECK(huffman::decode(std::vector<std::uint8_t>{}).empty());
    const std::vector<std::vector<std::int64_t>> cases{
        {7},
        {-3, -3, -3, -3},
        {INT64_MIN, INT64_MAX, 0},
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
        geometric_values(5000, 1),
        geometric_values(20000, 2, 0.01),
    };
    for (const auto& c : cases) {
        const auto bytes = huffman::encode(c);
        CHECK(huffman::decode(bytes) == c);
        CHECK(huffman::encode(huffman::decode(bytes)) == bytes);
    }
}

TEST_CASE("skewed input compresses below a byte per symbol") {
    std::vector<std::int64_t> v(10000, 0);
    for (std::size_t k = 0; k < v.size(); k += 50) v[k] = 1;
    CHECK(huffman::encode(v).size() < v.size() / 6);
}

TEST_CASE("non-canonical tables are rejected") {
    // Two symbols, equal frequency: the encoder picks lengths {1, 1}. Rewrite them as {1, 2}.
    const std::vector<std::int64_t> values{4, 9, 4, 9};
    auto bytes = huffman::encode(values);
    // count, distinct, sym0 (zigzag 8), len, gap 5, len
    REQUIRE(bytes[0] == 4);
    REQUIRE(bytes[1] == 2);
    REQUIRE(bytes[3] == 1);
    REQUIRE(bytes[5] == 1);
    bytes[5] = 2;
    CHECK_THROWS_AS(huffman::decode(bytes), FormatError);
}

TEST_CASE("corrupt streams are rejected") {
    const auto good = huffman::encode(geometric_values(300, 5));
    auto truncated = good;
    truncated.resize(good.size() - 3);
    CHECK_THROWS_AS(huffman::decode(truncated), FormatError);
    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(huffman::decode(trailing), FormatError);
    auto zero_length = huffman::encode(std::vector<std::int64_t>{1, 2, 2});
    zero_length[3] = 0;
    CHECK_THROWS_AS(huffman::decode(zero_length), FormatError);
    CHECK_THROWS_AS(huffman::decode(std::vector<std::uint8_t>{0x00, 0x00}), FormatError);
}

TEST_CASE("random byte strings never crash the decoder") {
    std::mt19937 gen(9);
    std::uniform_int_distribution<int> byte(0, 255), len(1, 40);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<std::uint8_t> junk(static_cast<std::size_t>(len(gen)));
        for (auto& b : junk) b = static_cast<std::uint8_t>(byte(gen));
        try {
            const auto v = huffman::decode(junk);
            CHECK(huffman::encode(v) == junk);
        } catch (const FormatError&) {
        }
    }
}
