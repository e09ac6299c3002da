#pragma once

#include "bowg/types.hpp"

namespace bowg {

struct detector_config {
    int max_features = 500;
    int n_levels = 4;
    double scale_factor = 1.2;
    int fast_threshold = 20;
    int patch_size = 31;
};

/// FAST-9 corners over an image pyramid with BRIEF-256 descriptors from a
/// fixed, deterministically seeded sampling pattern. Keypoint size is
/// patch_size * scale_factor^octave; positions are level-0 pixels.
/// Images smaller than the patch yield an empty result.
frame_features detect(const image_u8& image, const detector_config& config);

/// Plain FAST-9 segment test at one pixel (used by tests as a brute-force
/// reference and by the detector itself). Requires 3 <= x < w-3, 3 <= y < h-3.
bool fast9_is_corner(const image_u8& image, int x, int y, int threshold);

/// Corner response: the largest threshold at which the segment test passes.
int fast9_score(const image_u8& image, int x, int y);

}  // namespace bowg
