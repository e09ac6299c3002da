#include "bowg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace bowg {

namespace {

/// Mutual-nearest matching between two feature index blocks (one shared
/// direct-index node, or everything in exhaustive mode).
void match_block(const frame_features& query, std::span<const std::uint32_t> qf,
                 const frame_features& train, std::span<const std::uint32_t> tf,
                 const match_options& options, std::vector<correspondence>& out, match_stats* stats) {
    const std::size_t na = qf.size();
    const std::size_t nb = tf.size();
    if (na == 0 || nb == 0) return;
    if (stats) stats->comparisons += static_cast<std::uint64_t>(na) * nb;

    std::vector<unsigned> dist(na * nb);
    for (std::size_t i = 0; i < na; ++i) {
        const auto& dq = query.descriptors[qf[i]];
        for (std::size_t j = 0; j < nb; ++j)
            dist[i * nb + j] = hamming_distance(dq, train.descriptors[tf[j]]);
    }

    // Train-side nearest for the mutual check; ties go to the lowest index.
    std::vector<std::size_t> best_i(nb, 0);
    for (std::size_t j = 0; j < nb; ++j) {
        unsigned best = std::numeric_limits<unsigned>::max();
        for (std::size_t i = 0; i < na; ++i) {
            if (dist[i * nb + j] < best) {
                best = dist[i * nb + j];
                best_i[j] = i;
            }
        }
    }

    for (std::size_t i = 0; i < na; ++i) {
        std::size_t best_j = 0;
        unsigned d1 = std::numeric_limits<unsigned>::max();
        unsigned d2 = std::numeric_limits<unsigned>::max();
        for (std::size_t j = 0; j < nb; ++j) {
            const unsigned d = dist[i * nb + j];
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best_j = j;
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (d1 > options.max_hamming) continue;
        if (best_i[best_j] != i) continue;
        if (nb > 1 && static_cast<double>(d1) > options.ratio * static_cast<double>(d2)) continue;
        out.push_back({qf[i], tf[best_j], d1});
    }
}

}  // namespace

std::vector<correspondence> match_features(const frame_features& query, const node_feature_map& query_nodes,
                                           const frame_features& train, const node_feature_map& train_nodes,
                                           const match_options& options, match_stats* stats) {
    std::vector<correspondence> out;
    auto qit = query_nodes.begin();
    auto tit = train_nodes.begin();
    while (qit != query_nodes.end() && tit != train_nodes.end()) {
        if (qit->first < tit->first) {
            ++qit;
        } else if (tit->first < qit->first) {
            ++tit;
        } else {
            match_block(query, qit->second, train, tit->second, options, out, stats);
            ++qit;
            ++tit;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const correspondence& a, const correspondence& b) { return a.query_idx < b.query_idx; });
    return out;
}

std::vector<correspondence> match_features(const frame_features& query, const frame_features& train,
                                           const match_options& options, match_stats* stats) {
    std::vector<std::uint32_t> qf(query.size());
    std::vector<std::uint32_t> tf(train.size());
    for (std::uint32_t i = 0; i < qf.size(); ++i) qf[i] = i;
    for (std::uint32_t i = 0; i < tf.size(); ++i) tf[i] = i;
    std::vector<correspondence> out;
    match_block(query, qf, train, tf, options, out, stats);
    return out;
}

namespace {

/// Similarity transform taking the selected points to centroid 0 and mean
/// distance sqrt(2). Fails when the points (nearly) coincide.
bool hartley_normalize(std::span<const point2> pts, std::span<const std::uint32_t> idx,
                       Eigen::Matrix3d& t) {
    double cx = 0, cy = 0;
    for (const auto i : idx) {
        cx += pts[i].x;
        cy += pts[i].y;
    }
    cx /= static_cast<double>(idx.size());
    cy /= static_cast<double>(idx.size());
    double mean_dist = 0;
    for (const auto i : idx) mean_dist += std::hypot(pts[i].x - cx, pts[i].y - cy);
    mean_dist /= static_cast<double>(idx.size());
    if (mean_dist < 1e-12) return false;
    const double s = std::numbers::sqrt2 / mean_dist;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return true;
}

/// Normalized 8-point solve over the selected correspondences. Returns false
/// for degenerate configurations (`strict` applies the minimal-sample rank
/// check; refits skip it and take the least-squares solution).
bool eight_point(std::span<const point2> pts_a, std::span<const point2> pts_b,
                 std::span<const std::uint32_t> idx, bool strict, Eigen::Matrix3d& f_out) {
    Eigen::Matrix3d ta, tb;
    if (!hartley_normalize(pts_a, idx, ta) || !hartley_normalize(pts_b, idx, tb)) return false;

    Eigen::MatrixXd a(idx.size(), 9);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto i = idx[r];
        const double x = ta(0, 0) * pts_a[i].x + ta(0, 2);
        const double y = ta(1, 1) * pts_a[i].y + ta(1, 2);
        const double xp = tb(0, 0) * pts_b[i].x + tb(0, 2);
        const double yp = tb(1, 1) * pts_b[i].y + tb(1, 2);
        a.row(r) << xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, 1.0;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (strict && sv(std::min<Eigen::Index>(7, sv.size() - 1)) < 1e-9 * sv(0)) return false;

    const Eigen::VectorXd f = svd.matrixV().col(8);
    Eigen::Matrix3d fn;
    fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

    Eigen::JacobiSVD<Eigen::Matrix3d> svd3(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d = svd3.singularValues();
    d(2) = 0.0;
    fn = svd3.matrixU() * d.asDiagonal() * svd3.matrixV().transpose();

    f_out = tb.transpose() * fn * ta;

    const double norm = f_out.norm();
    if (norm < 1e-15) return false;
    f_out /= norm;
    // Deterministic sign: the absolutely largest entry is positive.
    int max_r = 0, max_c = 0;
    f_out.cwiseAbs().maxCoeff(&max_r, &max_c);
    if (f_out(max_r, max_c) < 0) f_out = -f_out;
    return true;
}

std::array<double, 9> to_array(const Eigen::Matrix3d& m) {
    return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
}

struct consensus {
    double cost = std::numeric_limits<double>::infinity();  // truncated quadratic, lower is better
    unsigned count = 0;
};

// MSAC scoring: each point pays min(residual^2, threshold^2), so among models
// with similar support the one fitting its inliers tightly wins. A pure
// inlier count would let a slightly warped model beat the true geometry by
// trading one well-fit inlier for a couple of coincidental outliers.
consensus score_inliers(const Eigen::Matrix3d& f, std::span<const point2> pts_a,
                        std::span<const point2> pts_b, double threshold,
                        std::vector<std::uint8_t>& mask) {
    const auto fa = to_array(f);
    const double t2 = threshold * threshold;
    consensus c;
    c.cost = 0.0;
    for (std::size_t i = 0; i < pts_a.size(); ++i) {
        const double r = symmetric_epipolar_residual(fa, pts_a[i], pts_b[i]);
        const bool in = r <= threshold;
        mask[i] = in ? 1 : 0;
        if (in) {
            ++c.count;
            c.cost += r * r;
        } else {
            c.cost += t2;
        }
    }
    return c;
}

}  // namespace

double symmetric_epipolar_residual(const std::array<double, 9>& f, point2 a, point2 b) {
    // Epipolar line of a in the second image, l_b = F * a.
    const double lb0 = f[0] * a.x + f[1] * a.y + f[2];
    const double lb1 = f[3] * a.x + f[4] * a.y + f[5];
    const double lb2 = f[6] * a.x + f[7] * a.y + f[8];
    const double e = b.x * lb0 + b.y * lb1 + lb2;  // = b^T F a
    // Epipolar line of b in the first image, l_a = F^T * b.
    const double la0 = f[0] * b.x + f[3] * b.y + f[6];
    const double la1 = f[1] * b.x + f[4] * b.y + f[7];

    const double nb = std::hypot(lb0, lb1);
    const double na = std::hypot(la0, la1);
    if (na < 1e-15 || nb < 1e-15) return std::numeric_limits<double>::infinity();
    return std::max(std::abs(e) / nb, std::abs(e) / na);
}

fundamental_result estimate_fundamental(std::span<const point2> pts_a, std::span<const point2> pts_b,
                                        const ransac_config& config) {
    fundamental_result result;
    if (pts_a.size() != pts_b.size()) throw std::invalid_argument("point sets differ in length");
    const std::size_t n = pts_a.size();
    if (n < 8) return result;

    std::mt19937_64 rng(config.seed);
    std::vector<std::uint32_t> scratch(n);
    for (std::uint32_t i = 0; i < n; ++i) scratch[i] = i;

    Eigen::Matrix3d best_f;
    std::vector<std::uint8_t> best_mask(n, 0);
    consensus best;
    std::vector<std::uint8_t> mask(n, 0);

    unsigned needed = config.max_iters;
    for (unsigned iter = 0; iter < needed; ++iter) {
        // Partial Fisher-Yates; the permuted tail carries over, which is fine
        // for sampling and keeps the sequence deterministic.
        for (std::size_t k = 0; k < 8; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng() % (n - k));
            std::swap(scratch[k], scratch[j]);
        }
        Eigen::Matrix3d f;
        if (!eight_point(pts_a, pts_b, std::span(scratch).first(8), true, f)) continue;

        const consensus c = score_inliers(f, pts_a, pts_b, config.epi_threshold, mask);
        if (c.cost < best.cost) {
            best = c;
            best_f = f;
            best_mask = mask;
            // 99%-confidence early exit on the current inlier ratio.
            const double w = static_cast<double>(c.count) / static_cast<double>(n);
            const double p_sample = std::pow(w, 8);
            if (p_sample > 1e-12) {
                const double k = std::log(0.01) / std::log1p(-p_sample);
                if (k < needed) needed = std::max(iter + 1, static_cast<unsigned>(std::ceil(k)));
            }
        }
    }
    if (best.count == 0) return result;

    // Refit on the consensus set; keep the hypothesis if the refit fits worse.
    std::vector<std::uint32_t> support;
    for (std::uint32_t i = 0; i < n; ++i)
        if (best_mask[i]) support.push_back(i);
    Eigen::Matrix3d refit_f;
    if (support.size() >= 8 && eight_point(pts_a, pts_b, support, false, refit_f)) {
        const consensus c = score_inliers(refit_f, pts_a, pts_b, config.epi_threshold, mask);
        if (c.cost <= best.cost) {
            best = c;
            best_f = refit_f;
            best_mask = mask;
        }
    }

    result.f = to_array(best_f);
    result.inlier_mask = std::move(best_mask);
    result.inlier_count = best.count;
    result.success = best.count >= std::max(8u, config.min_inliers);
    return result;
}

}  // namespace bowg
