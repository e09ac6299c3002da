#include "bowg/bench.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"

using namespace bowg;

namespace {

loop_result make_result(frame_id_t frame, loop_status status, frame_id_t matched, double eta,
                        std::int64_t micros = 100) {
    loop_result r;
    r.frame_id = frame;
    r.status = status;
    r.matched_id = matched;
    r.eta_w = eta * 0.9;
    r.eta_g = eta * 1.1;
    r.eta_d = 0.0;
    r.eta_sim = eta;
    if (matched != invalid_frame) r.island_range = {matched, matched + 2};
    r.inliers = status == loop_status::accepted ? 20 : 0;
    r.timings.total_micros = micros;
    return r;
}

loop_result accepted(frame_id_t frame, frame_id_t matched, double eta) {
    return make_result(frame, loop_status::accepted, matched, eta);
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

// Strips the trailing (wall-clock) column of every CSV line.
std::vector<std::string> lines_without_micros(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        const auto comma = line.rfind(',');
        out.push_back(line.substr(0, comma));
    }
    return out;
}

unsigned nearest_pool_index(const binary_descriptor& d, const std::vector<binary_descriptor>& pool) {
    unsigned best = 0, best_d = d.size_bits() + 1;
    for (unsigned i = 0; i < pool.size(); ++i) {
        const unsigned h = hamming_distance(d, pool[i]);
        if (h < best_d) {
            best_d = h;
            best = i;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("results CSV round trips every field") {
    std::vector<loop_result> rs;
    rs.push_back(make_result(0, loop_status::no_candidate, invalid_frame, 0.0, 42));
    auto featureless = make_result(1, loop_status::no_candidate, invalid_frame, 0.0, 7);
    featureless.featureless = true;
    rs.push_back(featureless);
    rs.push_back(make_result(25, loop_status::failed_temporal, 3, 0.5234567891234567, 333));
    rs.push_back(make_result(26, loop_status::failed_geometric, 4, 0.25, 11));
    rs.push_back(accepted(27, 5, 0.875));

    const auto path = temp_file("bowg_results_roundtrip.csv");
    write_results_csv(path, rs);
    const auto back = read_results_csv(path);

    REQUIRE(back.size() == rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(back[i].frame_id == rs[i].frame_id);
        CHECK(back[i].status == rs[i].status);
        CHECK(back[i].featureless == rs[i].featureless);
        CHECK(back[i].matched_id == rs[i].matched_id);
        CHECK(back[i].eta_w == rs[i].eta_w);
        CHECK(back[i].eta_g == rs[i].eta_g);
        CHECK(back[i].eta_d == rs[i].eta_d);
        CHECK(back[i].eta_sim == rs[i].eta_sim);
        CHECK(back[i].island_range == rs[i].island_range);
        CHECK(back[i].inliers == rs[i].inliers);
        CHECK(back[i].timings.total_micros == rs[i].timings.total_micros);
    }
    std::filesystem::remove(path);
}

TEST_CASE("the featureless reason rides on the status token") {
    auto r = make_result(4, loop_status::no_candidate, invalid_frame, 0.0);
    r.featureless = true;
    std::ostringstream out;
    write_results_csv(out, {&r, 1});
    CHECK(out.str().find("4,no_candidate(featureless),-1,") != std::string::npos);
}

TEST_CASE("malformed results CSVs are rejected") {
    const auto path = temp_file("bowg_results_bad.csv");
    auto write_text = [&](const char* text) {
        std::ofstream out(path);
        out << text;
    };

    SUBCASE("wrong header") {
        write_text("frame,whatever\n");
        CHECK_THROWS_AS((void)read_results_csv(path), parse_error);
    }
    SUBCASE("wrong field count") {
        write_text(
            "frame_id,status,matched_id,eta_w,eta_g,eta_d,eta_sim,island_lo,island_hi,inliers,micros\n"
            "1,accepted,0\n");
        CHECK_THROWS_AS((void)read_results_csv(path), parse_error);
    }
    SUBCASE("unknown status") {
        write_text(
            "frame_id,status,matched_id,eta_w,eta_g,eta_d,eta_sim,island_lo,island_hi,inliers,micros\n"
            "1,bogus,0,0,0,0,0,0,0,0,0\n");
        CHECK_THROWS_AS((void)read_results_csv(path), parse_error);
    }
    SUBCASE("bad number") {
        write_text(
            "frame_id,status,matched_id,eta_w,eta_g,eta_d,eta_sim,island_lo,island_hi,inliers,micros\n"
            "1,accepted,0,zero,0,0,0,0,0,0,0\n");
        CHECK_THROWS_AS((void)read_results_csv(path), parse_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)read_results_csv("/nonexistent/results.csv"), io_error);
    }
    std::filesystem::remove(path);
}

TEST_CASE("timing CSV lists the per-stage columns") {
    auto r = accepted(3, 0, 0.5);
    r.timings = {10, 20, 30, 40, 100};
    std::ostringstream out;
    write_timing_csv(out, {&r, 1});
    CHECK(out.str() ==
          "frame_id,transform_micros,groups_micros,query_micros,verify_micros,total_micros\n"
          "3,10,20,30,40,100\n");
}

TEST_CASE("ground truth text files round trip") {
    ground_truth gt;
    gt.tolerance = 5;
    gt.pairs = {{30, 4}, {10, 2}, {30, 6}};
    const auto path = temp_file("bowg_gt_roundtrip.txt");
    save_ground_truth(gt, path);

    const auto back = load_ground_truth(path);
    CHECK(back.tolerance == 5);
    // Saved sorted by (query, match).
    REQUIRE(back.pairs.size() == 3);
    CHECK(back.pairs[0] == std::pair<frame_id_t, frame_id_t>{10, 2});
    CHECK(back.pairs[1] == std::pair<frame_id_t, frame_id_t>{30, 4});
    CHECK(back.pairs[2] == std::pair<frame_id_t, frame_id_t>{30, 6});
    std::filesystem::remove(path);
}

TEST_CASE("ground truth parsing handles headers, comments and errors") {
    const auto path = temp_file("bowg_gt_cases.txt");
    auto write_text = [&](const char* text) {
        std::ofstream out(path);
        out << text;
    };

    SUBCASE("tolerance header and blank lines") {
        write_text("# a comment\n# tolerance 7\n\n12 3\r\n15 0 \n");
        const auto gt = load_ground_truth(path);
        CHECK(gt.tolerance == 7);
        REQUIRE(gt.pairs.size() == 2);
        CHECK(gt.pairs[0] == std::pair<frame_id_t, frame_id_t>{12, 3});
        CHECK(gt.pairs[1] == std::pair<frame_id_t, frame_id_t>{15, 0});
    }
    SUBCASE("default tolerance") {
        write_text("9 1\n");
        CHECK(load_ground_truth(path).tolerance == 2);
    }
    SUBCASE("match must precede query") {
        write_text("5 5\n");
        CHECK_THROWS_AS((void)load_ground_truth(path), parse_error);
        write_text("5 9\n");
        CHECK_THROWS_AS((void)load_ground_truth(path), parse_error);
    }
    SUBCASE("junk line") {
        write_text("not numbers\n");
        CHECK_THROWS_AS((void)load_ground_truth(path), parse_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_ground_truth("/nonexistent/gt.txt"), io_error);
    }
    std::filesystem::remove(path);
}

TEST_CASE("boolean matrices map lower-triangle cells to pairs") {
    const auto path = temp_file("bowg_gt_matrix.txt");
    auto write_text = [&](const char* text) {
        std::ofstream out(path);
        out << text;
    };

    SUBCASE("only cells below the diagonal count") {
        write_text(
            "1 1 0 0\n"
            "0 0 0 0\n"
            "1 0 0 1\n"
            "0 1 1 0\n");
        const auto gt = ground_truth_from_matrix(path, 3);
        CHECK(gt.tolerance == 3);
        REQUIRE(gt.pairs.size() == 3);
        CHECK(gt.pairs[0] == std::pair<frame_id_t, frame_id_t>{2, 0});
        CHECK(gt.pairs[1] == std::pair<frame_id_t, frame_id_t>{3, 1});
        CHECK(gt.pairs[2] == std::pair<frame_id_t, frame_id_t>{3, 2});
    }
    SUBCASE("ragged rows are rejected") {
        write_text("0 1\n0\n");
        CHECK_THROWS_AS((void)ground_truth_from_matrix(path), parse_error);
    }
    SUBCASE("non-square matrices are rejected") {
        write_text("0 1\n");
        CHECK_THROWS_AS((void)ground_truth_from_matrix(path), parse_error);
    }
    SUBCASE("non-numeric cells are rejected") {
        write_text("0 x\n1 0\n");
        CHECK_THROWS_AS((void)ground_truth_from_matrix(path), parse_error);
    }
    std::filesystem::remove(path);
}

TEST_CASE("summary statistics match hand-computed fixtures") {
    const std::vector<double> vals = {4.0, 1.0, 3.0, 2.0};
    const auto s = summarize(vals);
    CHECK(s.median == doctest::Approx(2.5));
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
    CHECK(s.max == doctest::Approx(4.0));

    const std::vector<double> odd = {5.0, 1.0, 9.0};
    CHECK(summarize(odd).median == doctest::Approx(5.0));

    const auto empty = summarize({});
    CHECK(empty.mean == 0.0);
    CHECK(empty.max == 0.0);
}

TEST_CASE("evaluation counts matches within the id tolerance") {
    ground_truth gt;
    gt.pairs = {{30, 10}, {31, 10}, {40, 20}};

    SUBCASE("all detections correct") {
        const std::vector<loop_result> rs = {accepted(30, 10, 0.9), accepted(31, 11, 0.8),
                                             accepted(40, 19, 0.7)};
        const auto rep = evaluate(rs, gt, 2);
        CHECK(rep.detections == 3);
        CHECK(rep.tp == 3);
        CHECK(rep.fp == 0);
        CHECK(rep.fn == 0);
        CHECK(rep.gt_queries == 3);
        CHECK(rep.precision == doctest::Approx(1.0));
        CHECK(rep.recall == doctest::Approx(1.0));
        CHECK(rep.f1 == doctest::Approx(1.0));
        CHECK(rep.recall_at_full_precision == doctest::Approx(1.0));
        CHECK(rep.auc == doctest::Approx(1.0));
    }
    SUBCASE("zero detections keep precision at one by convention") {
        const std::vector<loop_result> rs = {make_result(30, loop_status::failed_temporal, 10, 0.9),
                                             make_result(31, loop_status::no_candidate, invalid_frame, 0.0)};
        const auto rep = evaluate(rs, gt, 2);
        CHECK(rep.no_detections);
        CHECK(rep.detections == 0);
        CHECK(rep.precision == doctest::Approx(1.0));
        CHECK(rep.recall == doctest::Approx(0.0));
        CHECK(rep.f1 == doctest::Approx(0.0));
        CHECK(rep.fn == 3);
        CHECK(rep.auc == doctest::Approx(0.0));
        CHECK(rep.curve.empty());
    }
    SUBCASE("one wrong detection in five") {
        ground_truth gt5;
        gt5.pairs = {{30, 10}, {31, 10}, {40, 20}, {41, 20}, {50, 5}};
        const std::vector<loop_result> rs = {accepted(30, 10, 0.9), accepted(31, 10, 0.85),
                                             accepted(40, 20, 0.8), accepted(41, 20, 0.75),
                                             accepted(50, 33, 0.7)};  // 33 is far from 5
        const auto rep = evaluate(rs, gt5, 2);
        CHECK(rep.detections == 5);
        CHECK(rep.tp == 4);
        CHECK(rep.fp == 1);
        CHECK(rep.precision == doctest::Approx(0.8));
        CHECK(rep.recall == doctest::Approx(0.8));
    }
    SUBCASE("the tolerance parameter decides borderline matches") {
        const std::vector<loop_result> rs = {accepted(30, 12, 0.9)};
        CHECK(evaluate(rs, gt, 2).tp == 1);
        CHECK(evaluate(rs, gt, 1).tp == 0);
        CHECK(evaluate(rs, gt, 1).fp == 1);
    }
    SUBCASE("a detection on a query absent from the ground truth is a false positive") {
        const std::vector<loop_result> rs = {accepted(99, 10, 0.9)};
        const auto rep = evaluate(rs, gt, 2);
        CHECK(rep.tp == 0);
        CHECK(rep.fp == 1);
    }
    SUBCASE("distinct ground-truth queries define recall") {
        ground_truth multi;
        multi.pairs = {{30, 1}, {30, 3}, {40, 2}};
        const auto rep = evaluate({}, multi, 2);
        CHECK(rep.gt_queries == 2);
        CHECK(rep.fn == 2);
    }
}

TEST_CASE("the precision-recall sweep produces the hand-computed curve") {
    ground_truth gt;
    gt.pairs = {{30, 10}, {40, 20}};
    const std::vector<loop_result> rs = {accepted(30, 10, 0.9), accepted(35, 2, 0.8),
                                         accepted(40, 20, 0.7)};
    const auto rep = evaluate(rs, gt, 2);

    REQUIRE(rep.curve.size() == 3);
    CHECK(rep.curve[0].alpha == doctest::Approx(0.9));
    CHECK(rep.curve[0].precision == doctest::Approx(1.0));
    CHECK(rep.curve[0].recall == doctest::Approx(0.5));
    CHECK(rep.curve[1].alpha == doctest::Approx(0.8));
    CHECK(rep.curve[1].precision == doctest::Approx(0.5));
    CHECK(rep.curve[1].recall == doctest::Approx(0.5));
    CHECK(rep.curve[2].alpha == doctest::Approx(0.7));
    CHECK(rep.curve[2].precision == doctest::Approx(2.0 / 3.0));
    CHECK(rep.curve[2].recall == doctest::Approx(1.0));

    // Recall never decreases as alpha drops.
    for (std::size_t i = 1; i < rep.curve.size(); ++i)
        CHECK(rep.curve[i].recall >= rep.curve[i - 1].recall);

    CHECK(rep.recall_at_full_precision == doctest::Approx(0.5));
    // Trapezoids: 0.5*(1+1)/2 + 0 + 0.5*(0.5+2/3)/2 = 19/24.
    CHECK(rep.auc == doctest::Approx(19.0 / 24.0).epsilon(1e-12));

    SUBCASE("equal scores collapse into one curve point") {
        ground_truth gt2;
        gt2.pairs = {{30, 10}, {40, 20}};
        const std::vector<loop_result> tied = {accepted(30, 10, 0.8), accepted(35, 2, 0.8)};
        const auto r2 = evaluate(tied, gt2, 2);
        REQUIRE(r2.curve.size() == 1);
        CHECK(r2.curve[0].tp == 1);
        CHECK(r2.curve[0].fp == 1);
    }
}

TEST_CASE("timing summary covers every query, not only detections") {
    ground_truth gt;
    const std::vector<loop_result> rs = {make_result(0, loop_status::no_candidate, invalid_frame, 0.0, 10),
                                         make_result(1, loop_status::failed_temporal, 0, 0.4, 20),
                                         make_result(21, loop_status::accepted, 0, 0.9, 30)};
    const auto rep = evaluate(rs, gt, 2);
    CHECK(rep.total_micros.mean == doctest::Approx(20.0));
    CHECK(rep.total_micros.max == doctest::Approx(30.0));
}

TEST_CASE("config text round trips through parse and format") {
    run_settings s;
    s.scoring.lambda1 = 0.45;
    s.loop.k_temporal = 5;
    s.loop.use_geometric = false;
    s.matching.max_hamming = 48;
    s.ransac.seed = 99;
    s.database.refresh_refined = true;

    const std::string text = format_config(s);
    std::istringstream in(text);
    const run_settings back = parse_config(in, "mem");
    CHECK(format_config(back) == text);
    CHECK(back.scoring.lambda1 == 0.45);
    CHECK(back.loop.k_temporal == 5);
    CHECK_FALSE(back.loop.use_geometric);
    CHECK(back.matching.max_hamming == 48);
    CHECK(back.ransac.seed == 99);
    CHECK(back.database.refresh_refined);
}

TEST_CASE("config parsing accepts comments and layered bases") {
    std::istringstream in(
        "# full line comment\n"
        "\n"
        "lambda1 = 0.25  # trailing comment\n"
        "  k_temporal=7\n");
    run_settings base;
    base.loop.overlap_slack = 9;
    const auto s = parse_config(in, "mem", base);
    CHECK(s.scoring.lambda1 == 0.25);
    CHECK(s.loop.k_temporal == 7);
    CHECK(s.loop.overlap_slack == 9);  // untouched base value survives
}

TEST_CASE("config errors carry their origin") {
    SUBCASE("unknown key") {
        std::istringstream in("nope = 3\n");
        CHECK_THROWS_WITH_AS((void)parse_config(in, "mem"), doctest::Contains("mem:1"), parse_error);
    }
    SUBCASE("missing equals") {
        std::istringstream in("lambda1 0.5\n");
        CHECK_THROWS_WITH_AS((void)parse_config(in, "mem"), doctest::Contains("mem:1"), parse_error);
    }
    SUBCASE("bad number") {
        std::istringstream in("\nlambda1 = abc\n");
        CHECK_THROWS_WITH_AS((void)parse_config(in, "mem"), doctest::Contains("mem:2"), parse_error);
    }
    SUBCASE("bad bool") {
        std::istringstream in("use_geometric = maybe\n");
        CHECK_THROWS_AS((void)parse_config(in, "mem"), parse_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_config("/nonexistent/bowg.conf"), io_error);
    }
    SUBCASE("apply_setting rejects unknown keys directly") {
        run_settings s;
        CHECK_THROWS_AS(apply_setting(s, "mystery", "1"), parse_error);
    }
}

TEST_CASE("config keys are unique and cover the documented knobs") {
    const auto keys = config_keys();
    CHECK(keys.size() >= 20);
    std::set<std::string_view> unique(keys.begin(), keys.end());
    CHECK(unique.size() == keys.size());
    for (const char* expected : {"alpha_threshold", "lambda1", "use_distribution", "di_level",
                                 "recent_exclusion", "ransac_seed", "fast_threshold"}) {
        CHECK(unique.count(expected) == 1);
    }
}

TEST_CASE("the aliasing generator is deterministic and structured") {
    synth_config cfg;
    cfg.areas = 2;
    cfg.places_per_area = 4;
    cfg.frames_per_place = 2;
    cfg.words_per_place = 36;
    cfg.noise_bits = 4;
    cfg.training_copies = 2;
    cfg.seed = 17;

    const auto a = generate_aliasing(cfg);
    const auto b = generate_aliasing(cfg);

    const frame_id_t area0 = cfg.places_per_area * cfg.frames_per_place;
    const frame_id_t walk = cfg.areas * area0;
    CHECK(a.revisit_start == walk);
    CHECK(a.frames.size() == walk + area0);
    CHECK(a.gt.tolerance == cfg.gt_tolerance);
    CHECK(a.training_pool.size() == cfg.pool_size * (cfg.training_copies + 1));
    CHECK(a.spurious_ids.empty());

    SUBCASE("bitwise deterministic replay") {
        REQUIRE(a.frames.size() == b.frames.size());
        for (std::size_t i = 0; i < a.frames.size(); ++i) {
            REQUIRE(a.frames[i].size() == b.frames[i].size());
            for (std::size_t j = 0; j < a.frames[i].size(); ++j) {
                CHECK(a.frames[i].keypoints[j].x == b.frames[i].keypoints[j].x);
                CHECK(a.frames[i].keypoints[j].y == b.frames[i].keypoints[j].y);
                CHECK(a.frames[i].descriptors[j].to_bytes() == b.frames[i].descriptors[j].to_bytes());
            }
        }
        CHECK(a.gt.pairs == b.gt.pairs);
    }

    SUBCASE("ground truth holds only revisit pairs") {
        CHECK(a.gt.pairs.size() == area0 * cfg.frames_per_place);
        for (const auto& [q, m] : a.gt.pairs) {
            CHECK(q >= a.revisit_start);
            CHECK(m < area0);
        }
    }

    SUBCASE("frames stay inside the image and near the word budget") {
        for (const auto& f : a.frames) {
            CHECK(f.size() >= cfg.words_per_place - cfg.dropped_words);
            CHECK(f.size() <= cfg.words_per_place);
            for (const auto& kp : f.keypoints) {
                CHECK(kp.x >= 5.0);
                CHECK(kp.x <= cfg.width - 5.0);
                CHECK(kp.y >= 5.0);
                CHECK(kp.y <= cfg.height - 5.0);
            }
        }
    }

    SUBCASE("areas draw from the same descriptor pool") {
        std::set<unsigned> used[2];
        std::vector<binary_descriptor> pool_guess;
        // Recover pool membership through the training pool's exact copies.
        for (unsigned i = 0; i < cfg.pool_size; ++i)
            pool_guess.push_back(a.training_pool[i * (cfg.training_copies + 1)]);
        for (frame_id_t fid = 0; fid < walk; ++fid) {
            const unsigned area = fid < area0 ? 0 : 1;
            for (const auto& d : a.frames[fid].descriptors)
                used[area].insert(nearest_pool_index(d, pool_guess));
        }
        std::vector<unsigned> common;
        std::set_intersection(used[0].begin(), used[0].end(), used[1].begin(), used[1].end(),
                              std::back_inserter(common));
        // Aliasing by construction: both areas reuse most of the shared pool.
        CHECK(common.size() >= cfg.pool_size / 2);
    }
}

TEST_CASE("spurious frames sit inside the walk and outside the ground truth") {
    synth_config cfg;
    cfg.areas = 3;
    cfg.places_per_area = 4;
    cfg.frames_per_place = 2;
    cfg.words_per_place = 18;
    cfg.training_copies = 1;
    cfg.spurious = 2;
    cfg.seed = 23;

    const auto out = generate_aliasing(cfg);
    const frame_id_t area0 = cfg.places_per_area * cfg.frames_per_place;
    REQUIRE(out.spurious_ids.size() == 2);
    std::set<frame_id_t> gt_queries;
    for (const auto& [q, m] : out.gt.pairs) gt_queries.insert(q);
    for (const frame_id_t id : out.spurious_ids) {
        CHECK(id >= area0);
        CHECK(id < out.revisit_start);
        CHECK(gt_queries.count(id) == 0);
    }
}

TEST_CASE("aliasing generator validates its configuration") {
    synth_config cfg;
    SUBCASE("clique profile") {
        cfg.words_per_place = 20;
        CHECK_THROWS_AS((void)generate_aliasing(cfg), std::invalid_argument);
    }
    SUBCASE("pool too small") {
        cfg.pool_size = 18;
        cfg.words_per_place = 36;
        CHECK_THROWS_AS((void)generate_aliasing(cfg), std::invalid_argument);
    }
    SUBCASE("single area") {
        cfg.areas = 1;
        CHECK_THROWS_AS((void)generate_aliasing(cfg), std::invalid_argument);
    }
    SUBCASE("descriptor bits") {
        cfg.descriptor_bits = 100;
        CHECK_THROWS_AS((void)generate_aliasing(cfg), std::invalid_argument);
    }
    SUBCASE("too many spurious frames") {
        cfg.areas = 2;
        cfg.places_per_area = 2;
        cfg.frames_per_place = 2;
        cfg.spurious = 1;  // stride below the minimum spacing
        CHECK_THROWS_AS((void)generate_aliasing(cfg), std::invalid_argument);
    }
}

TEST_CASE("the scale-test sequence generator is deterministic and bounded") {
    sequence_config cfg;
    cfg.n_frames = 30;
    cfg.n_sites = 200;
    cfg.features_per_frame = 25;
    cfg.sites_per_place = 20;
    cfg.noise_bits = 4;

    const auto a = generate_sequence(cfg);
    const auto b = generate_sequence(cfg);
    REQUIRE(a.frames.size() == cfg.n_frames);
    CHECK(a.sites.size() == cfg.n_sites);

    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        const auto& f = a.frames[i];
        CHECK(f.frame_id == i);
        REQUIRE(f.size() == cfg.features_per_frame);
        for (std::size_t j = 0; j < f.size(); ++j) {
            CHECK(f.keypoints[j].x >= 10.0);
            CHECK(f.keypoints[j].x <= cfg.width - 10.0);
            CHECK(f.descriptors[j].to_bytes() == b.frames[i].descriptors[j].to_bytes());

            // Every descriptor is a bounded-noise copy of some site.
            unsigned best = cfg.descriptor_bits;
            for (const auto& s : a.sites) best = std::min(best, hamming_distance(f.descriptors[j], s));
            CHECK(best <= cfg.noise_bits);
        }
    }

    SUBCASE("validation") {
        cfg.descriptor_bits = 12;
        CHECK_THROWS_AS((void)generate_sequence(cfg), std::invalid_argument);
        cfg.descriptor_bits = 256;
        cfg.n_sites = 10;
        CHECK_THROWS_AS((void)generate_sequence(cfg), std::invalid_argument);
    }
}

TEST_CASE("replaying the same stream twice gives identical results modulo wall time") {
    synth_config cfg;
    cfg.areas = 2;
    cfg.places_per_area = 3;
    cfg.frames_per_place = 2;
    cfg.words_per_place = 18;
    cfg.noise_bits = 4;
    cfg.training_copies = 3;
    cfg.seed = 5;
    const auto synth = generate_aliasing(cfg);

    vocab_config vc;
    vc.k = 4;
    vc.levels = 3;
    vc.seed = 5;
    auto voc = std::make_shared<const vocabulary>(vocabulary::train(synth.training_pool, vc));

    run_settings settings;
    settings.loop.recent_exclusion = 4;
    settings.loop.alpha_threshold = 0.1;
    settings.loop.k_temporal = 1;
    settings.loop.use_geometric = false;

    auto det1 = make_detector(voc, settings);
    auto det2 = make_detector(voc, settings);
    const auto r1 = replay(det1, synth.frames);
    const auto r2 = replay(det2, synth.frames);

    REQUIRE(r1.size() == synth.frames.size());
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].frame_id == i);

    std::ostringstream csv1, csv2;
    write_results_csv(csv1, r1);
    write_results_csv(csv2, r2);
    CHECK(lines_without_micros(csv1.str()) == lines_without_micros(csv2.str()));

    SUBCASE("the detector honors the loop settings it was built with") {
        CHECK(det1.config().recent_exclusion == 4);
        CHECK(det1.config().k_temporal == 1);
    }
}
