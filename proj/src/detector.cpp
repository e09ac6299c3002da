#include "bowg/detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace bowg {

namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr std::array<std::pair<int, int>, 16> k_circle = {{{0, -3},
                                                           {1, -3},
                                                           {2, -2},
                                                           {3, -1},
                                                           {3, 0},
                                                           {3, 1},
                                                           {2, 2},
                                                           {1, 3},
                                                           {0, 3},
                                                           {-1, 3},
                                                           {-2, 2},
                                                           {-3, 1},
                                                           {-3, 0},
                                                           {-3, -1},
                                                           {-2, -2},
                                                           {-1, -3}}};

constexpr int k_arc = 9;
constexpr int k_brief_bits = 256;

struct brief_pattern {
    std::array<std::array<int, 4>, k_brief_bits> pairs;  // x1, y1, x2, y2
};

// Fixed sampling pattern, generated once from a constant seed so the
// descriptor is identical across platforms and runs.
brief_pattern make_pattern(int patch_size) {
    brief_pattern p{};
    std::mt19937 rng(0x9e3779b9u);
    const int half = patch_size / 2;
    const unsigned span = static_cast<unsigned>(patch_size);
    for (auto& pair : p.pairs) {
        for (int k = 0; k < 4; ++k) {
            pair[k] = static_cast<int>(rng() % span) - half;
        }
    }
    return p;
}

std::array<int, 16> ring_values(const image_u8& img, int x, int y) {
    std::array<int, 16> v{};
    for (int i = 0; i < 16; ++i) {
        v[i] = img.at(x + k_circle[i].first, y + k_circle[i].second);
    }
    return v;
}

// Largest margin over all contiguous 9-arcs, for one polarity.
int arc_margin(const std::array<int, 16>& diff) {
    int best = 0;
    for (int start = 0; start < 16; ++start) {
        int m = diff[start];
        for (int k = 1; k < k_arc && m > best; ++k) {
            m = std::min(m, diff[(start + k) & 15]);
        }
        best = std::max(best, m);
    }
    return best;
}

image_u8 resample_bilinear(const image_u8& src, int dst_w, int dst_h) {
    image_u8 dst;
    dst.width = dst_w;
    dst.height = dst_h;
    dst.pixels.resize(static_cast<std::size_t>(dst_w) * dst_h);
    const double sx = static_cast<double>(src.width) / dst_w;
    const double sy = static_cast<double>(src.height) / dst_h;
    for (int y = 0; y < dst_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < dst_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * src.at(x0, y0) + wx * src.at(x1, y0)) +
                             wy * ((1 - wx) * src.at(x0, y1) + wx * src.at(x1, y1));
            dst.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return dst;
}

// Separable 5-tap binomial blur with clamped borders.
image_u8 blur5(const image_u8& src) {
    static constexpr int k[5] = {1, 4, 6, 4, 1};
    image_u8 tmp = src, dst = src;
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            int acc = 0;
            for (int i = -2; i <= 2; ++i) {
                acc += k[i + 2] * src.at(std::clamp(x + i, 0, src.width - 1), y);
            }
            tmp.at(x, y) = static_cast<std::uint8_t>((acc + 8) / 16);
        }
    }
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            int acc = 0;
            for (int i = -2; i <= 2; ++i) {
                acc += k[i + 2] * tmp.at(x, std::clamp(y + i, 0, src.height - 1));
            }
            dst.at(x, y) = static_cast<std::uint8_t>((acc + 8) / 16);
        }
    }
    return dst;
}

std::optional<double> centroid_angle(const image_u8& img, int x, int y, int radius) {
    long long m10 = 0, m01 = 0;
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > r2) continue;
            const int v = img.at(x + dx, y + dy);
            m10 += static_cast<long long>(dx) * v;
            m01 += static_cast<long long>(dy) * v;
        }
    }
    if (m10 == 0 && m01 == 0) return std::nullopt;
    double a = std::atan2(static_cast<double>(m01), static_cast<double>(m10));
    if (a < 0) a += 2 * std::numbers::pi;
    return a;
}

struct scored_corner {
    int x, y, score, octave;
};

}  // namespace

bool fast9_is_corner(const image_u8& image, int x, int y, int threshold) {
    const int c = image.at(x, y);
    const auto ring = ring_values(image, x, y);
    std::array<int, 16> brighter{}, darker{};
    for (int i = 0; i < 16; ++i) {
        brighter[i] = ring[i] - c - threshold;
        darker[i] = c - ring[i] - threshold;
    }
    return arc_margin(brighter) > 0 || arc_margin(darker) > 0;
}

int fast9_score(const image_u8& image, int x, int y) {
    const int c = image.at(x, y);
    const auto ring = ring_values(image, x, y);
    std::array<int, 16> brighter{}, darker{};
    for (int i = 0; i < 16; ++i) {
        brighter[i] = ring[i] - c;
        darker[i] = c - ring[i];
    }
    // Score s means the segment test still passes at threshold s-1.
    return std::max(arc_margin(brighter), arc_margin(darker)) - 1;
}

frame_features detect(const image_u8& image, const detector_config& config) {
    frame_features out;
    out.width = image.width;
    out.height = image.height;

    const int half_patch = config.patch_size / 2;
    const int border = half_patch + 3;
    static const brief_pattern pattern = make_pattern(31);

    std::vector<scored_corner> corners;
    std::vector<image_u8> levels;
    std::vector<image_u8> blurred;

    for (int level = 0; level < config.n_levels; ++level) {
        const double scale = std::pow(config.scale_factor, level);
        const int w = static_cast<int>(std::lround(image.width / scale));
        const int h = static_cast<int>(std::lround(image.height / scale));
        if (w <= 2 * border || h <= 2 * border) break;
        image_u8 lv = (level == 0) ? image : resample_bilinear(image, w, h);

        // FAST with non-max suppression on the score map.
        std::vector<int> score(static_cast<std::size_t>(w) * h, -1);
        for (int y = border; y < h - border; ++y) {
            for (int x = border; x < w - border; ++x) {
                if (!fast9_is_corner(lv, x, y, config.fast_threshold)) continue;
                score[static_cast<std::size_t>(y) * w + x] = fast9_score(lv, x, y);
            }
        }
        for (int y = border; y < h - border; ++y) {
            for (int x = border; x < w - border; ++x) {
                const int s = score[static_cast<std::size_t>(y) * w + x];
                if (s < 0) continue;
                bool is_max = true;
                for (int dy = -1; dy <= 1 && is_max; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int n = score[static_cast<std::size_t>(y + dy) * w + (x + dx)];
                        // Ties break toward the raster-earlier pixel.
                        if (n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0)))) {
                            is_max = false;
                            break;
                        }
                    }
                }
                if (is_max) corners.push_back({x, y, s, level});
            }
        }
        levels.push_back(std::move(lv));
        blurred.push_back(blur5(levels.back()));
    }

    std::stable_sort(corners.begin(), corners.end(), [](const scored_corner& a, const scored_corner& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.octave != b.octave) return a.octave < b.octave;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(corners.size()) > config.max_features) corners.resize(config.max_features);

    out.keypoints.reserve(corners.size());
    out.descriptors.reserve(corners.size());
    for (const auto& c : corners) {
        const image_u8& smooth = blurred[c.octave];
        binary_descriptor d(k_brief_bits);
        for (int i = 0; i < k_brief_bits; ++i) {
            const auto& p = pattern.pairs[i];
            const int a = smooth.at(c.x + p[0], c.y + p[1]);
            const int b = smooth.at(c.x + p[2], c.y + p[3]);
            if (a < b) d.set_bit(i, true);
        }
        const double level_scale = std::pow(config.scale_factor, c.octave);
        keypoint kp;
        kp.x = c.x * level_scale;
        kp.y = c.y * level_scale;
        kp.size = config.patch_size * level_scale;
        kp.angle = centroid_angle(blurred[c.octave], c.x, c.y, half_patch);
        kp.octave = c.octave;
        out.keypoints.push_back(kp);
        out.descriptors.push_back(std::move(d));
    }
    return out;
}

}  // namespace bowg
