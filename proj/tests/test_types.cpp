#include "bowg/types.hpp"

#include <random>

#include "doctest.h"

using namespace bowg;

TEST_CASE("descriptor bit order is MSB-first within a byte") {
    const auto d = binary_descriptor::from_hex("80");
    CHECK(d.size_bits() == 8);
    CHECK(d.bit(0));
    for (unsigned i = 1; i < 8; ++i) CHECK_FALSE(d.bit(i));

    const auto e = binary_descriptor::from_hex("01");
    CHECK(e.bit(7));
    for (unsigned i = 0; i < 7; ++i) CHECK_FALSE(e.bit(i));
}

TEST_CASE("hex round trip, case-insensitive input, lowercase output") {
    const std::string hex = "0123456789abcdefABCDEF00ff00ff00";
    const auto d = binary_descriptor::from_hex(hex);
    CHECK(d.size_bits() == hex.size() * 4);
    CHECK(d.to_hex() == "0123456789abcdefabcdef00ff00ff00");
    CHECK(binary_descriptor::from_hex(d.to_hex()) == d);
}

TEST_CASE("byte round trip") {
    std::vector<std::uint8_t> bytes = {0x00, 0xff, 0x5a, 0xa5, 0x01, 0x80, 0x7e, 0x81};
    const auto d = binary_descriptor::from_bytes(bytes);
    CHECK(d.size_bits() == 64);
    CHECK(d.to_bytes() == bytes);
}

TEST_CASE("set_bit round trips through bytes and hex") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        binary_descriptor d(256);
        for (unsigned i = 0; i < 256; ++i) d.set_bit(i, (rng() & 1) != 0);
        CHECK(binary_descriptor::from_bytes(d.to_bytes()) == d);
        CHECK(binary_descriptor::from_hex(d.to_hex()) == d);
    }
}

TEST_CASE("malformed hex input is rejected") {
    CHECK_THROWS_AS((void)binary_descriptor::from_hex("abc"), parse_error);   // odd length
    CHECK_THROWS_AS((void)binary_descriptor::from_hex("zz"), parse_error);    // bad digit
    CHECK_THROWS_AS((void)binary_descriptor::from_hex("a g0"), parse_error);  // bad digit
}

TEST_CASE("hamming distance basics") {
    const auto zero = binary_descriptor::from_hex("0000");
    const auto ones = binary_descriptor::from_hex("ffff");
    CHECK(hamming_distance(zero, zero) == 0);
    CHECK(hamming_distance(zero, ones) == 16);
    CHECK(hamming_distance(ones, zero) == 16);

    const auto a = binary_descriptor::from_hex("f0f0");
    const auto b = binary_descriptor::from_hex("0f0f");
    CHECK(hamming_distance(a, b) == 16);
    CHECK(hamming_distance(a, a) == 0);
}

TEST_CASE("hamming distance agrees with a per-bit counter on random pairs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        binary_descriptor a(256), b(256);
        for (unsigned i = 0; i < 256; ++i) {
            a.set_bit(i, (rng() & 1) != 0);
            b.set_bit(i, (rng() & 1) != 0);
        }
        unsigned expect = 0;
        for (unsigned i = 0; i < 256; ++i) {
            if (a.bit(i) != b.bit(i)) ++expect;
        }
        CHECK(hamming_distance(a, b) == expect);
        CHECK(hamming_distance(b, a) == expect);
    }
}

TEST_CASE("frame_features reports the shared descriptor width") {
    frame_features f;
    CHECK(f.descriptor_bits() == 0);
    f.keypoints.push_back({10.0, 20.0, 31.0, std::nullopt, 0});
    f.descriptors.push_back(binary_descriptor(256));
    CHECK(f.descriptor_bits() == 256);
    CHECK(f.size() == 1);
}
