#include "bowg/wordgroup.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace bowg {

namespace {

constexpr double k_grid_cell = 32.0;

struct cell_key {
    int cx, cy;
    bool operator==(const cell_key&) const = default;
};

struct cell_hash {
    std::size_t operator()(const cell_key& c) const {
        return std::hash<long long>()((static_cast<long long>(c.cx) << 32) ^ static_cast<unsigned>(c.cy));
    }
};

}  // namespace

word_group_vector extract_word_groups(std::span<const keypoint> keypoints,
                                      std::span<const word_id_t> word_ids) {
    if (keypoints.size() != word_ids.size())
        throw std::invalid_argument("keypoints and word_ids differ in length");

    word_group_vector groups;
    if (keypoints.size() < 2) return groups;

    std::unordered_map<cell_key, std::vector<std::uint32_t>, cell_hash> grid;
    grid.reserve(keypoints.size());
    for (std::uint32_t i = 0; i < keypoints.size(); ++i) {
        grid[{static_cast<int>(std::floor(keypoints[i].x / k_grid_cell)),
              static_cast<int>(std::floor(keypoints[i].y / k_grid_cell))}]
            .push_back(i);
    }

    for (std::uint32_t i = 0; i < keypoints.size(); ++i) {
        const auto& kp = keypoints[i];
        const double s2 = kp.size * kp.size;
        const int cx0 = static_cast<int>(std::floor((kp.x - kp.size) / k_grid_cell));
        const int cx1 = static_cast<int>(std::floor((kp.x + kp.size) / k_grid_cell));
        const int cy0 = static_cast<int>(std::floor((kp.y - kp.size) / k_grid_cell));
        const int cy1 = static_cast<int>(std::floor((kp.y + kp.size) / k_grid_cell));
        std::uint32_t count = 0;
        for (int cy = cy0; cy <= cy1; ++cy) {
            for (int cx = cx0; cx <= cx1; ++cx) {
                const auto it = grid.find({cx, cy});
                if (it == grid.end()) continue;
                for (const auto j : it->second) {
                    if (j == i) continue;
                    const double dx = keypoints[j].x - kp.x;
                    const double dy = keypoints[j].y - kp.y;
                    if (dx * dx + dy * dy < s2) ++count;
                }
            }
        }
        if (count > 0) groups[word_ids[i]].raw += count;
    }
    return groups;
}

word_group_vector refine_weights(const word_group_vector& raw, const word_group_table& table) {
    word_group_vector refined;
    if (raw.empty()) return refined;

    std::uint64_t frame_total = 0;
    for (const auto& [id, e] : raw) frame_total += e.raw;

    for (const auto& [id, e] : raw) {
        const double tf = static_cast<double>(e.raw) / static_cast<double>(frame_total);
        const double idf =
            std::log(static_cast<double>(table.total()) / static_cast<double>(table.cumulative(id)));
        refined[id] = {e.raw, tf * idf};
    }
    return refined;
}

bool distribution_vector::is_zero() const {
    for (const double v : batches) {
        if (v != 0.0) return false;
    }
    return true;
}

distribution_vector compute_distribution(std::span<const keypoint> keypoints, double width,
                                         double height, unsigned m) {
    if (m < 2) throw std::invalid_argument("distribution batch count must be >= 2");
    distribution_vector dist;
    dist.batches.assign(m, 0.0);

    const double cx = width / 2.0;
    const double cy = height / 2.0;
    const double batch_width = 2 * std::numbers::pi / m;
    for (const auto& kp : keypoints) {
        double theta = std::atan2(kp.y - cy, kp.x - cx);
        if (theta < 0) theta += 2 * std::numbers::pi;
        unsigned k = static_cast<unsigned>(theta / batch_width);
        if (k >= m) k = m - 1;
        dist.batches[k] += 1.0;
    }

    double norm2 = 0;
    for (const double v : dist.batches) norm2 += v * v;
    if (norm2 > 0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : dist.batches) v *= inv;
    }
    return dist;
}

}  // namespace bowg
