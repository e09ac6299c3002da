#include "bowg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"

using namespace bowg;

namespace {

binary_descriptor random_descriptor(std::mt19937_64& rng, unsigned bits = 256) {
    binary_descriptor d(bits);
    for (unsigned i = 0; i < bits; ++i) d.set_bit(i, (rng() & 1) != 0);
    return d;
}

binary_descriptor flipped(binary_descriptor d, std::mt19937_64& rng, unsigned flips) {
    for (unsigned i = 0; i < flips; ++i) {
        const unsigned b = rng() % d.size_bits();
        d.set_bit(b, !d.bit(b));
    }
    return d;
}

binary_descriptor flip_first(binary_descriptor d, unsigned n) {
    for (unsigned i = 0; i < n; ++i) d.set_bit(i, !d.bit(i));
    return d;
}

frame_features frame_of(std::vector<binary_descriptor> ds) {
    frame_features f;
    f.width = 640;
    f.height = 480;
    for (std::size_t i = 0; i < ds.size(); ++i)
        f.keypoints.push_back({double(i), double(i), 31.0, std::nullopt, 0});
    f.descriptors = std::move(ds);
    return f;
}

// Minimal 3x3 helpers for the planted-geometry oracle (row-major).
using mat3 = std::array<double, 9>;

mat3 mul(const mat3& a, const mat3& b) {
    mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
    return c;
}

mat3 transpose(const mat3& a) {
    return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

double det(const mat3& a) {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
}

struct planted_scene {
    mat3 f;                      // ground-truth fundamental matrix
    std::vector<point2> pts_a;   // first view
    std::vector<point2> pts_b;   // second view
};

// Two pinhole views of random 3D points; F = K^-T [t]x R K^-1.
planted_scene make_scene(std::uint64_t seed, unsigned n_points) {
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };

    const double fl = 500.0, cx = 320.0, cy = 240.0;
    const mat3 k = {fl, 0, cx, 0, fl, cy, 0, 0, 1};
    const mat3 k_inv = {1 / fl, 0, -cx / fl, 0, 1 / fl, -cy / fl, 0, 0, 1};

    const double ay = uniform(-0.25, 0.25);  // yaw
    const double ax = uniform(-0.12, 0.12);  // pitch
    const mat3 ry = {std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay)};
    const mat3 rx = {1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax)};
    const mat3 r = mul(rx, ry);
    const double t[3] = {uniform(0.5, 1.5), uniform(-0.2, 0.2), uniform(-0.2, 0.2)};
    const mat3 t_cross = {0, -t[2], t[1], t[2], 0, -t[0], -t[1], t[0], 0};

    planted_scene scene;
    scene.f = mul(transpose(k_inv), mul(t_cross, mul(r, k_inv)));

    while (scene.pts_a.size() < n_points) {
        const double x[3] = {uniform(-2.5, 2.5), uniform(-1.8, 1.8), uniform(4.0, 10.0)};
        const double xb[3] = {r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + t[0],
                              r[3] * x[0] + r[4] * x[1] + r[5] * x[2] + t[1],
                              r[6] * x[0] + r[7] * x[1] + r[8] * x[2] + t[2]};
        if (xb[2] < 0.5) continue;
        const point2 pa = {fl * x[0] / x[2] + cx, fl * x[1] / x[2] + cy};
        const point2 pb = {fl * xb[0] / xb[2] + cx, fl * xb[1] / xb[2] + cy};
        if (pa.x < 0 || pa.x >= 640 || pa.y < 0 || pa.y >= 480) continue;
        if (pb.x < 0 || pb.x >= 640 || pb.y < 0 || pb.y >= 480) continue;
        scene.pts_a.push_back(pa);
        scene.pts_b.push_back(pb);
    }
    return scene;
}

double epipolar_product(const mat3& f, point2 a, point2 b) {
    const double l0 = f[0] * a.x + f[1] * a.y + f[2];
    const double l1 = f[3] * a.x + f[4] * a.y + f[5];
    const double l2 = f[6] * a.x + f[7] * a.y + f[8];
    return b.x * l0 + b.y * l1 + l2;
}

}  // namespace

TEST_CASE("identical frames match feature to feature at distance zero") {
    std::mt19937_64 rng(3);
    std::vector<binary_descriptor> ds;
    for (int i = 0; i < 30; ++i) ds.push_back(random_descriptor(rng));
    const auto f = frame_of(ds);

    match_stats stats;
    const auto matches = match_features(f, f, {}, &stats);
    REQUIRE(matches.size() == f.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
        CHECK(matches[i].query_idx == i);
        CHECK(matches[i].match_idx == i);
        CHECK(matches[i].distance == 0);
    }
    CHECK(stats.comparisons == 30u * 30u);
}

TEST_CASE("disjoint direct-index nodes yield no correspondences") {
    std::mt19937_64 rng(5);
    std::vector<binary_descriptor> ds;
    for (int i = 0; i < 8; ++i) ds.push_back(random_descriptor(rng));
    const auto f = frame_of(ds);

    node_feature_map qn = {{1, {0, 1, 2, 3}}, {3, {4, 5, 6, 7}}};
    node_feature_map tn = {{2, {0, 1, 2, 3}}, {4, {4, 5, 6, 7}}};
    match_stats stats;
    CHECK(match_features(f, qn, f, tn, {}, &stats).empty());
    CHECK(stats.comparisons == 0);
}

TEST_CASE("direct-index matching stays within shared nodes and counts comparisons") {
    std::mt19937_64 rng(7);
    std::vector<binary_descriptor> ds;
    for (int i = 0; i < 10; ++i) ds.push_back(random_descriptor(rng));
    const auto f = frame_of(ds);

    // Shared nodes 2 (4x2 block) and 5 (3x5 block); node 9 only on one side.
    node_feature_map qn = {{2, {0, 1, 2, 3}}, {5, {4, 5, 6}}, {9, {7, 8, 9}}};
    node_feature_map tn = {{2, {0, 1}}, {5, {2, 3, 4, 5, 6}}};
    match_stats stats;
    const auto matches = match_features(f, qn, f, tn, {}, &stats);
    CHECK(stats.comparisons == 4 * 2 + 3 * 5);
    for (const auto& m : matches) {
        CHECK(m.query_idx <= 6);  // node-9 features can never match
    }
    // Output is ordered by query index.
    for (std::size_t i = 1; i < matches.size(); ++i) {
        CHECK(matches[i - 1].query_idx < matches[i].query_idx);
    }
}

TEST_CASE("matches above max_hamming are rejected") {
    std::mt19937_64 rng(9);
    const auto base = random_descriptor(rng);
    const auto query = frame_of({base});
    const auto train = frame_of({flip_first(base, 70)});

    match_options opt;
    opt.max_hamming = 64;
    CHECK(match_features(query, train, opt).empty());
    opt.max_hamming = 80;
    CHECK(match_features(query, train, opt).size() == 1);
}

TEST_CASE("the second-nearest ratio test prunes ambiguous matches") {
    std::mt19937_64 rng(11);
    const auto base = random_descriptor(rng);
    const auto query = frame_of({base});

    // Distances 10 and 11: 10 > 0.8 * 11, ambiguous, rejected.
    const auto close_pair = frame_of({flip_first(base, 10), flip_first(base, 11)});
    CHECK(match_features(query, close_pair, {}).empty());

    // Distances 4 and 60: clearly unambiguous.
    const auto far_pair = frame_of({flip_first(base, 4), flip_first(base, 60)});
    const auto matches = match_features(query, far_pair, {});
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].match_idx == 0);
    CHECK(matches[0].distance == 4);
}

TEST_CASE("the mutual check keeps only reciprocal nearest pairs") {
    std::mt19937_64 rng(13);
    const auto base = random_descriptor(rng);
    // Two queries close to one train descriptor; only the closer query keeps it.
    const auto query = frame_of({flip_first(base, 2), flip_first(base, 4)});
    const auto train = frame_of({base, random_descriptor(rng)});

    const auto matches = match_features(query, train, {});
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].query_idx == 0);
    CHECK(matches[0].match_idx == 0);
    CHECK(matches[0].distance == 2);
}

TEST_CASE("direct-index matches are contained in the exhaustive matches") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        // Sites are far apart (random 256-bit), so nearest neighbors never
        // cross sites; node id == site id makes containment exact.
        const unsigned n_sites = 20;
        std::vector<binary_descriptor> sites;
        for (unsigned s = 0; s < n_sites; ++s) sites.push_back(random_descriptor(rng));

        std::vector<binary_descriptor> qd, td;
        std::vector<node_id_t> qnodes, tnodes;
        for (unsigned s = 0; s < n_sites; ++s) {
            qd.push_back(flipped(sites[s], rng, 3));
            qnodes.push_back(s);
            const unsigned copies = 1 + rng() % 2;
            for (unsigned c = 0; c < copies; ++c) {
                td.push_back(flipped(sites[s], rng, 3));
                tnodes.push_back(s);
            }
        }
        const auto query = frame_of(qd);
        const auto train = frame_of(td);

        node_feature_map qn, tn;
        for (std::uint32_t i = 0; i < qnodes.size(); ++i) qn.push_back({qnodes[i], {i}});
        {
            std::map<node_id_t, std::vector<std::uint32_t>> grouping;
            for (std::uint32_t i = 0; i < tnodes.size(); ++i) grouping[tnodes[i]].push_back(i);
            tn.assign(grouping.begin(), grouping.end());
        }

        match_stats di_stats, ex_stats;
        const auto di = match_features(query, qn, train, tn, {}, &di_stats);
        const auto ex = match_features(query, train, {}, &ex_stats);

        for (const auto& m : di) {
            CHECK(std::find(ex.begin(), ex.end(), m) != ex.end());
        }
        CHECK(di_stats.comparisons < ex_stats.comparisons);
    }
}

TEST_CASE("planted noise-free geometry is recovered exactly") {
    const auto scene = make_scene(101, 30);
    // The oracle itself must satisfy the epipolar constraint.
    for (std::size_t i = 0; i < scene.pts_a.size(); ++i) {
        REQUIRE(std::abs(epipolar_product(scene.f, scene.pts_a[i], scene.pts_b[i])) < 1e-9);
    }

    ransac_config cfg;
    const auto res = estimate_fundamental(scene.pts_a, scene.pts_b, cfg);
    REQUIRE(res.success);
    CHECK(res.inlier_count == 30);
    for (std::size_t i = 0; i < scene.pts_a.size(); ++i) {
        CHECK(res.inlier_mask[i] == 1);
        CHECK(symmetric_epipolar_residual(res.f, scene.pts_a[i], scene.pts_b[i]) < 1e-6);
    }
}

TEST_CASE("planted inliers survive uniform outliers") {
    std::mt19937_64 rng(19);
    for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
        auto scene = make_scene(seed, 20);
        const std::size_t n_inliers = scene.pts_a.size();
        for (int i = 0; i < 20; ++i) {
            scene.pts_a.push_back({double(rng() % 640), double(rng() % 480)});
            scene.pts_b.push_back({double(rng() % 640), double(rng() % 480)});
        }

        ransac_config cfg;
        cfg.epi_threshold = 2.0;
        cfg.seed = seed;
        // At 50% contamination an all-inlier 8-point sample is a ~0.16% event
        // per draw, so give the search enough attempts to make one certain.
        cfg.max_iters = 5000;
        const auto res = estimate_fundamental(scene.pts_a, scene.pts_b, cfg);
        REQUIRE(res.success);
        unsigned recovered = 0;
        for (std::size_t i = 0; i < n_inliers; ++i) recovered += res.inlier_mask[i];
        CHECK(recovered >= 19);
    }
}

TEST_CASE("fewer than eight correspondences always fails") {
    const auto scene = make_scene(23, 7);
    const auto res = estimate_fundamental(scene.pts_a, scene.pts_b, {});
    CHECK_FALSE(res.success);
    CHECK(res.inlier_count == 0);
}

TEST_CASE("mismatched point set lengths are rejected") {
    const auto scene = make_scene(29, 10);
    const std::vector<point2> shorter(scene.pts_b.begin(), scene.pts_b.end() - 1);
    CHECK_THROWS_AS((void)estimate_fundamental(scene.pts_a, shorter, {}), std::invalid_argument);
}

TEST_CASE("returned matrices are rank 2 with unit Frobenius norm") {
    for (std::uint64_t seed : {31ull, 37ull, 41ull}) {
        const auto scene = make_scene(seed, 25);
        const auto res = estimate_fundamental(scene.pts_a, scene.pts_b, {});
        REQUIRE(res.success);
        CHECK(std::abs(det(res.f)) < 1e-10);
        double norm2 = 0;
        for (const double v : res.f) norm2 += v * v;
        CHECK(std::sqrt(norm2) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("every reported inlier satisfies the residual bound") {
    std::mt19937_64 rng(43);
    auto scene = make_scene(47, 25);
    for (int i = 0; i < 15; ++i) {
        scene.pts_a.push_back({double(rng() % 640), double(rng() % 480)});
        scene.pts_b.push_back({double(rng() % 640), double(rng() % 480)});
    }
    ransac_config cfg;
    cfg.epi_threshold = 2.0;
    const auto res = estimate_fundamental(scene.pts_a, scene.pts_b, cfg);
    REQUIRE(res.success);
    for (std::size_t i = 0; i < scene.pts_a.size(); ++i) {
        if (res.inlier_mask[i]) {
            CHECK(symmetric_epipolar_residual(res.f, scene.pts_a[i], scene.pts_b[i]) <= cfg.epi_threshold);
        } else {
            CHECK(symmetric_epipolar_residual(res.f, scene.pts_a[i], scene.pts_b[i]) > cfg.epi_threshold);
        }
    }
}

TEST_CASE("estimation is deterministic for a fixed seed") {
    std::mt19937_64 rng(53);
    auto scene = make_scene(59, 20);
    for (int i = 0; i < 20; ++i) {
        scene.pts_a.push_back({double(rng() % 640), double(rng() % 480)});
        scene.pts_b.push_back({double(rng() % 640), double(rng() % 480)});
    }
    ransac_config cfg;
    cfg.seed = 1234;
    const auto a = estimate_fundamental(scene.pts_a, scene.pts_b, cfg);
    const auto b = estimate_fundamental(scene.pts_a, scene.pts_b, cfg);
    REQUIRE(a.success);
    CHECK(a.f == b.f);
    CHECK(a.inlier_mask == b.inlier_mask);
    CHECK(a.inlier_count == b.inlier_count);
}

TEST_CASE("symmetric residual is zero on the epipolar line and grows off it") {
    const auto scene = make_scene(61, 15);
    const auto res = estimate_fundamental(scene.pts_a, scene.pts_b, {});
    REQUIRE(res.success);

    const auto a = scene.pts_a[0];
    const auto b = scene.pts_b[0];
    const double r0 = symmetric_epipolar_residual(res.f, a, b);
    CHECK(r0 < 1e-6);

    // Shift the second point 3px along the epipolar line's normal: the
    // point-line distance, and hence the max-of-both residual, grows by 3.
    const double l0 = res.f[0] * a.x + res.f[1] * a.y + res.f[2];
    const double l1 = res.f[3] * a.x + res.f[4] * a.y + res.f[5];
    const double n = std::hypot(l0, l1);
    REQUIRE(n > 0);
    const point2 off = {b.x + 3.0 * l0 / n, b.y + 3.0 * l1 / n};
    CHECK(symmetric_epipolar_residual(res.f, a, off) >= doctest::Approx(3.0).epsilon(1e-6));
}
