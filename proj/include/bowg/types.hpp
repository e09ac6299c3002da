#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bowg {

using frame_id_t = std::uint32_t;
using word_id_t = std::uint32_t;
using node_id_t = std::uint32_t;

constexpr frame_id_t invalid_frame = static_cast<frame_id_t>(-1);

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fixed-width binary descriptor compared under Hamming distance.
/// Width must be a positive multiple of 8. Bit i lives in byte i/8,
/// MSB-first within the byte (matches the hex serialization).
class binary_descriptor {
public:
    binary_descriptor() = default;

    explicit binary_descriptor(unsigned bits) : bits_(bits), blocks_((bits + 63) / 64, 0) {}

    static binary_descriptor from_bytes(std::span<const std::uint8_t> bytes);
    static binary_descriptor from_hex(std::string_view hex);

    unsigned size_bits() const { return bits_; }
    bool empty() const { return bits_ == 0; }

    bool bit(unsigned i) const { return (blocks_[i >> 6] >> (i & 63)) & 1u; }

    void set_bit(unsigned i, bool v) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v)
            blocks_[i >> 6] |= mask;
        else
            blocks_[i >> 6] &= ~mask;
    }

    std::vector<std::uint8_t> to_bytes() const;
    std::string to_hex() const;

    std::span<const std::uint64_t> blocks() const { return blocks_; }

    bool operator==(const binary_descriptor&) const = default;

private:
    unsigned bits_ = 0;
    std::vector<std::uint64_t> blocks_;
};

inline unsigned hamming_distance(const binary_descriptor& a, const binary_descriptor& b) {
    unsigned d = 0;
    const auto& ba = a.blocks();
    const auto& bb = b.blocks();
    for (std::size_t i = 0; i < ba.size(); ++i) {
        d += static_cast<unsigned>(std::popcount(ba[i] ^ bb[i]));
    }
    return d;
}

/// Multi-scale feature point. `size` is the diameter of the support region
/// in level-0 pixels; `angle` is optional metadata in [0, 2*pi).
struct keypoint {
    double x = 0.0;
    double y = 0.0;
    double size = 0.0;
    std::optional<double> angle;
    int octave = 0;
};

/// All features of one image: keypoints paired with descriptors.
struct frame_features {
    frame_id_t frame_id = 0;
    double timestamp = 0.0;
    int width = 0;
    int height = 0;
    std::vector<keypoint> keypoints;
    std::vector<binary_descriptor> descriptors;

    std::size_t size() const { return keypoints.size(); }
    unsigned descriptor_bits() const { return descriptors.empty() ? 0 : descriptors.front().size_bits(); }
};

/// Direct-index entry of one frame: vocabulary node id at the configured
/// level -> indices of the features that fall under it, sorted by node id.
using node_feature_map = std::vector<std::pair<node_id_t, std::vector<std::uint32_t>>>;

/// 8-bit grayscale raster.
struct image_u8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace bowg
