#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bowg/types.hpp"

namespace bowg {

/// Parses a features file (header `BOWG-FEAT v1 <bits>`, see README).
/// Frames must carry strictly increasing ids and a uniform descriptor width.
/// Throws parse_error naming the offending line.
std::vector<frame_features> load_features(const std::filesystem::path& path);
std::vector<frame_features> parse_features(std::istream& in, const std::string& origin);

/// Canonical text form: writing then re-reading is bit-identical, and
/// serializing a loaded file reproduces it byte-for-byte.
std::string serialize_features(std::span<const frame_features> frames, unsigned descriptor_bits);
void save_features(const std::filesystem::path& path, std::span<const frame_features> frames,
                   unsigned descriptor_bits);

/// 8-bit binary PGM (P5) reader for the built-in detector.
image_u8 load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const image_u8& img);

}  // namespace bowg
