#include "bowg/types.hpp"

#include <fmt/format.h>

namespace bowg {

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

binary_descriptor binary_descriptor::from_bytes(std::span<const std::uint8_t> bytes) {
    binary_descriptor d(static_cast<unsigned>(bytes.size() * 8));
    for (unsigned j = 0; j < bytes.size(); ++j) {
        for (unsigned b = 0; b < 8; ++b) {
            if ((bytes[j] >> (7 - b)) & 1u) d.set_bit(j * 8 + b, true);
        }
    }
    return d;
}

binary_descriptor binary_descriptor::from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw parse_error("hex descriptor has odd length");
    std::vector<std::uint8_t> bytes(hex.size() / 2);
    for (std::size_t j = 0; j < bytes.size(); ++j) {
        const int hi = hex_nibble(hex[2 * j]);
        const int lo = hex_nibble(hex[2 * j + 1]);
        if (hi < 0 || lo < 0) throw parse_error(fmt::format("invalid hex digit in descriptor at offset {}", 2 * j));
        bytes[j] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return from_bytes(bytes);
}

std::vector<std::uint8_t> binary_descriptor::to_bytes() const {
    std::vector<std::uint8_t> bytes(bits_ / 8, 0);
    for (unsigned j = 0; j < bytes.size(); ++j) {
        std::uint8_t v = 0;
        for (unsigned b = 0; b < 8; ++b) {
            v = static_cast<std::uint8_t>(v << 1 | (bit(j * 8 + b) ? 1 : 0));
        }
        bytes[j] = v;
    }
    return bytes;
}

std::string binary_descriptor::to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    const auto bytes = to_bytes();
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

}  // namespace bowg
