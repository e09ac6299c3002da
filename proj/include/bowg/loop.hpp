#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "bowg/database.hpp"
#include "bowg/geometry.hpp"

namespace bowg {

struct loop_config {
    double alpha_threshold = 0.3;     // minimum eta_sim for candidacy
    unsigned max_island_gap = 3;      // frames between island members
    unsigned k_temporal = 3;          // previous matches the chain must span
    unsigned delta_t = 1;             // frame step between chain checks
    unsigned overlap_slack = 3;       // allowed interval gap in the chain
    unsigned recent_exclusion = 20;   // dissimilarity window
    unsigned min_inliers = 12;        // geometric acceptance floor
    bool use_geometric = true;
    bool history_accepted_only = false;  // record only accepted matches in the chain history
};

struct frame_interval {
    frame_id_t lo = invalid_frame;
    frame_id_t hi = invalid_frame;

    bool operator==(const frame_interval&) const = default;
};

/// Run of temporally adjacent candidates, scored by the sum of member
/// similarities.
struct island {
    frame_id_t lo = 0;
    frame_id_t hi = 0;
    double score = 0.0;  // H, sum of member eta_sim
    frame_id_t best_member = invalid_frame;
    double best_score = 0.0;
    std::vector<std::pair<frame_id_t, double>> members;
};

/// Partitions candidates (sorted by frame id) into maximal runs whose
/// consecutive id gaps stay within max_gap. Best member ties break toward
/// the lower id.
std::vector<island> build_islands(std::span<const candidate_score> candidates, unsigned max_gap);

/// Argmax-H island; ties prefer the larger best-member score, then lower ids.
/// Empty input -> nullptr.
const island* select_island(std::span<const island> islands);

/// Frames-between distance of two intervals; 0 when they overlap or touch.
unsigned interval_gap(const frame_interval& a, const frame_interval& b);

/// Walks the match chain backwards: the island at query t must lie within
/// overlap_slack of the one at t - delta_t, that one of t - 2*delta_t, and
/// so on for k_temporal steps. A missing history entry breaks the chain;
/// k_temporal == 0 always passes.
bool check_temporal(const island& best, std::span<const std::optional<frame_interval>> history,
                    frame_id_t t, const loop_config& config);

enum class loop_status { no_candidate, failed_temporal, failed_geometric, accepted };

std::string_view status_name(loop_status s);
std::optional<loop_status> status_from_name(std::string_view name);

struct stage_timings {
    std::int64_t transform_micros = 0;
    std::int64_t groups_micros = 0;
    std::int64_t query_micros = 0;
    std::int64_t verify_micros = 0;
    std::int64_t total_micros = 0;  // whole detect call; stage sums exclude bookkeeping
};

struct loop_result {
    frame_id_t frame_id = 0;
    loop_status status = loop_status::no_candidate;
    bool featureless = false;  // query rejected by the self-score floor
    frame_id_t matched_id = invalid_frame;
    double eta_w = 0.0;
    double eta_g = 0.0;
    double eta_d = 0.0;
    double eta_sim = 0.0;
    frame_interval island_range;
    unsigned inliers = 0;
    stage_timings timings;
};

/// Sequential loop-closure frontend: query, island selection, temporal
/// chain, geometric verification, then commit (a frame never matches
/// itself). Must see every frame of the stream, in order, so that the
/// history lines up with frame ids.
class loop_detector {
public:
    explicit loop_detector(std::shared_ptr<database> db, loop_config config = {},
                           scoring_config scoring = {}, match_options matching = {},
                           ransac_config ransac = {});

    loop_result detect(frame_features frame);

    database& db() { return *db_; }
    const database& db() const { return *db_; }
    const loop_config& config() const { return config_; }
    const std::vector<std::optional<frame_interval>>& history() const { return history_; }
    const score_cache& cache() const { return cache_; }

private:
    std::shared_ptr<database> db_;
    loop_config config_;
    scoring_config scoring_;
    match_options matching_;
    ransac_config ransac_;
    score_cache cache_;
    std::vector<std::optional<frame_interval>> history_;  // indexed by query frame id
};

}  // namespace bowg
