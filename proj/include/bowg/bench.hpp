#pragma once

#include <filesystem>
#include <iosfwd>

#include "bowg/config.hpp"
#include "bowg/loop.hpp"

namespace bowg {

/// Accepted (query, match) pairs with a frame tolerance radius.
struct ground_truth {
    unsigned tolerance = 2;
    std::vector<std::pair<frame_id_t, frame_id_t>> pairs;  // match < query
};

/// Text format: optional `# tolerance N` header, then one `query match`
/// pair per line.
ground_truth load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const ground_truth& gt, const std::filesystem::path& path);

/// Square boolean matrix (whitespace-separated 0/1 rows, as shipped with the
/// public datasets); cell (i, j) nonzero with j < i becomes pair (i, j).
ground_truth ground_truth_from_matrix(const std::filesystem::path& path, unsigned tolerance = 2);

/// Loop-results CSV:
/// frame_id,status,matched_id,eta_w,eta_g,eta_d,eta_sim,island_lo,island_hi,inliers,micros
/// Missing ids are -1; the featureless reason rides on the status token.
void write_results_csv(std::ostream& out, std::span<const loop_result> results);
void write_results_csv(const std::filesystem::path& path, std::span<const loop_result> results);
std::vector<loop_result> read_results_csv(const std::filesystem::path& path);

/// Per-stage timing CSV:
/// frame_id,transform_micros,groups_micros,query_micros,verify_micros,total_micros
void write_timing_csv(std::ostream& out, std::span<const loop_result> results);
void write_timing_csv(const std::filesystem::path& path, std::span<const loop_result> results);

/// Builds a detector with a fresh database over the vocabulary.
loop_detector make_detector(std::shared_ptr<const vocabulary> vocab, const run_settings& settings);

/// Feeds the frames through the detector in order.
std::vector<loop_result> replay(loop_detector& detector, std::span<const frame_features> frames);

struct stat_summary {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    double max = 0.0;
};

stat_summary summarize(std::span<const double> values);

struct pr_point {
    double alpha = 0.0;  // threshold on the recorded eta_sim
    unsigned tp = 0;
    unsigned fp = 0;
    double precision = 1.0;
    double recall = 0.0;
};

struct eval_report {
    unsigned detections = 0;
    unsigned tp = 0;
    unsigned fp = 0;
    unsigned fn = 0;
    unsigned gt_queries = 0;  // distinct query ids in the ground truth
    double precision = 1.0;   // 1.0 by convention when there are no detections
    double recall = 0.0;
    double f1 = 0.0;
    bool no_detections = false;
    std::vector<pr_point> curve;  // alpha descending (recall non-decreasing)
    double auc = 0.0;
    double recall_at_full_precision = 0.0;
    stat_summary total_micros;  // over all queries, not only detections
};

/// A detection (t, t') is a true positive iff the ground truth holds some
/// (t, g) with |t' - g| <= tolerance. The curve re-thresholds the recorded
/// eta_sim values.
eval_report evaluate(std::span<const loop_result> results, const ground_truth& gt, unsigned tolerance);

/// Perceptual-aliasing scenario: every area draws words from one shared
/// descriptor pool (so word vectors collide), but each area arranges them in
/// its own co-occurrence cliques (group weights differ) and its own angular
/// layout (distributions differ). The trajectory walks all areas in order,
/// then revisits area 0; ground truth holds only the revisit pairs.
/// Optionally injects lone look-alike frames of area-0 places into the other
/// segments ("spurious" frames, deliberately absent from the ground truth).
struct synth_config {
    unsigned areas = 4;
    unsigned places_per_area = 10;
    unsigned frames_per_place = 4;
    unsigned pool_size = 40;        // shared descriptor pool
    unsigned words_per_place = 36;  // must be a multiple of 18 (clique profile 2/3/6)
    unsigned descriptor_bits = 256;
    unsigned noise_bits = 6;    // descriptor bits flipped per occurrence
    unsigned dropped_words = 3;  // per-frame occlusion
    double jitter_px = 2.0;
    unsigned spurious = 0;
    unsigned width = 640;
    unsigned height = 480;
    unsigned gt_tolerance = 2;
    unsigned training_copies = 25;  // noisy copies per pool descriptor for vocab training
    std::uint64_t seed = 1;
};

struct synth_output {
    std::vector<frame_features> frames;
    ground_truth gt;
    std::vector<binary_descriptor> training_pool;
    std::vector<frame_id_t> spurious_ids;
    frame_id_t revisit_start = 0;
};

synth_output generate_aliasing(const synth_config& config);

/// Plain synthetic stream for scale tests: a long walk through unique
/// places, each place holding a random subset of a large descriptor-site
/// pool, features scattered uniformly. No revisits, no ground truth.
struct sequence_config {
    unsigned n_frames = 1000;
    unsigned n_sites = 10000;
    unsigned features_per_frame = 60;
    unsigned frames_per_place = 10;
    unsigned sites_per_place = 60;
    unsigned descriptor_bits = 256;
    unsigned noise_bits = 4;
    unsigned width = 640;
    unsigned height = 480;
    std::uint64_t seed = 7;
};

struct sequence_output {
    std::vector<frame_features> frames;
    std::vector<binary_descriptor> sites;  // vocab training pool
};

sequence_output generate_sequence(const sequence_config& config);

}  // namespace bowg
