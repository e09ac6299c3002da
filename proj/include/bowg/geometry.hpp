#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bowg/types.hpp"

namespace bowg {

struct correspondence {
    std::uint32_t query_idx = 0;
    std::uint32_t match_idx = 0;
    unsigned distance = 0;

    bool operator==(const correspondence&) const = default;
};

struct match_options {
    unsigned max_hamming = 64;
    double ratio = 0.8;  // best distance must be <= ratio * second-best
};

struct match_stats {
    std::uint64_t comparisons = 0;  // descriptor pairs examined
};

/// Correspondence search restricted to features that fall under the same
/// direct-index node: within each shared node, mutually nearest descriptors
/// under Hamming distance, with distance <= max_hamming and a query-side
/// second-nearest ratio test. Ties break toward the lowest feature index.
/// Matches are one-to-one and come out ordered by query index.
std::vector<correspondence> match_features(const frame_features& query, const node_feature_map& query_nodes,
                                           const frame_features& train, const node_feature_map& train_nodes,
                                           const match_options& options, match_stats* stats = nullptr);

/// Same filtering rules with all feature pairs considered.
std::vector<correspondence> match_features(const frame_features& query, const frame_features& train,
                                           const match_options& options, match_stats* stats = nullptr);

struct point2 {
    double x = 0.0;
    double y = 0.0;
};

struct ransac_config {
    double epi_threshold = 2.0;  // pixels
    unsigned max_iters = 500;    // with adaptive early exit at 99% confidence
    std::uint64_t seed = 0;
    unsigned min_inliers = 12;
};

struct fundamental_result {
    bool success = false;
    std::array<double, 9> f{};  // row-major, ||F||_F = 1, rank 2
    std::vector<std::uint8_t> inlier_mask;
    unsigned inlier_count = 0;
};

/// Residual used for inlier classification: the larger of the two
/// point-to-epipolar-line distances, in pixels.
double symmetric_epipolar_residual(const std::array<double, 9>& f, point2 a, point2 b);

/// Seeded RANSAC over the normalized 8-point solve (Hartley normalization,
/// SVD least squares, rank-2 enforcement). Models are ranked by truncated
/// quadratic consensus over the symmetric epipolar residual (inlier iff
/// residual <= epi_threshold), then refit on the best inlier set. Fails on
/// fewer than 8 pairs or a final inlier count below min_inliers.
/// Deterministic for a fixed seed.
fundamental_result estimate_fundamental(std::span<const point2> pts_a, std::span<const point2> pts_b,
                                        const ransac_config& config);

}  // namespace bowg
