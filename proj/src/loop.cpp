#include "bowg/loop.hpp"

#include <algorithm>
#include <chrono>

namespace bowg {

namespace {

std::int64_t micros_between(std::chrono::steady_clock::time_point a,
                            std::chrono::steady_clock::time_point b) {
    return std::chrono::duration_cast<std::chrono::microseconds>(b - a).count();
}

}  // namespace

std::vector<island> build_islands(std::span<const candidate_score> candidates, unsigned max_gap) {
    std::vector<island> islands;
    for (const candidate_score& c : candidates) {
        const bool extend = !islands.empty() && c.frame_id - islands.back().hi <= max_gap;
        if (!extend) islands.emplace_back(island{c.frame_id, c.frame_id, 0.0, c.frame_id, c.eta_sim, {}});
        island& isl = islands.back();
        isl.hi = c.frame_id;
        isl.score += c.eta_sim;
        isl.members.emplace_back(c.frame_id, c.eta_sim);
        if (c.eta_sim > isl.best_score) {
            isl.best_score = c.eta_sim;
            isl.best_member = c.frame_id;
        }
    }
    return islands;
}

const island* select_island(std::span<const island> islands) {
    const island* best = nullptr;
    for (const island& isl : islands) {
        if (!best || isl.score > best->score ||
            (isl.score == best->score &&
             (isl.best_score > best->best_score ||
              (isl.best_score == best->best_score && isl.lo < best->lo)))) {
            best = &isl;
        }
    }
    return best;
}

unsigned interval_gap(const frame_interval& a, const frame_interval& b) {
    if (a.lo <= b.hi && b.lo <= a.hi) return 0;
    return b.hi < a.lo ? a.lo - b.hi : b.lo - a.hi;
}

bool check_temporal(const island& best, std::span<const std::optional<frame_interval>> history,
                    frame_id_t t, const loop_config& config) {
    if (config.k_temporal == 0) return true;
    frame_interval current{best.lo, best.hi};
    for (unsigned j = 1; j <= config.k_temporal; ++j) {
        const std::int64_t tq = static_cast<std::int64_t>(t) - static_cast<std::int64_t>(j) * config.delta_t;
        if (tq < 0 || static_cast<std::size_t>(tq) >= history.size()) return false;
        const auto& entry = history[static_cast<std::size_t>(tq)];
        if (!entry) return false;
        if (interval_gap(current, *entry) > config.overlap_slack) return false;
        current = *entry;
    }
    return true;
}

std::string_view status_name(loop_status s) {
    switch (s) {
        case loop_status::no_candidate: return "no_candidate";
        case loop_status::failed_temporal: return "failed_temporal";
        case loop_status::failed_geometric: return "failed_geometric";
        case loop_status::accepted: return "accepted";
    }
    return "unknown";
}

std::optional<loop_status> status_from_name(std::string_view name) {
    // The featureless reason tag rides on the status token.
    if (name == "no_candidate" || name == "no_candidate(featureless)") return loop_status::no_candidate;
    if (name == "failed_temporal") return loop_status::failed_temporal;
    if (name == "failed_geometric") return loop_status::failed_geometric;
    if (name == "accepted") return loop_status::accepted;
    return std::nullopt;
}

loop_detector::loop_detector(std::shared_ptr<database> db, loop_config config, scoring_config scoring,
                             match_options matching, ransac_config ransac)
    : db_(std::move(db)),
      config_(config),
      scoring_(scoring),
      matching_(matching),
      ransac_(ransac) {
    if (!db_) throw std::invalid_argument("loop_detector: null database");
    ransac_.min_inliers = config_.min_inliers;
    history_.resize(db_->size());  // frames added outside the detector have no chain entries
}

loop_result loop_detector::detect(frame_features frame) {
    const auto t0 = std::chrono::steady_clock::now();
    prepared_query q = db_->prepare(std::move(frame));

    loop_result r;
    r.frame_id = q.frame_id;
    r.timings.transform_micros = q.transform_micros;
    r.timings.groups_micros = q.groups_micros;

    const auto t1 = std::chrono::steady_clock::now();
    const query_result qr = db_->query_candidates(
        q, scoring_, {config_.alpha_threshold, config_.recent_exclusion}, cache_);
    const auto t2 = std::chrono::steady_clock::now();
    r.timings.query_micros = micros_between(t1, t2);

    std::optional<frame_interval> chain_entry;
    if (qr.status == query_status::rejected_featureless) {
        r.featureless = true;
    } else if (!qr.candidates.empty()) {
        std::vector<candidate_score> by_id(qr.candidates.begin(), qr.candidates.end());
        std::sort(by_id.begin(), by_id.end(),
                  [](const candidate_score& a, const candidate_score& b) { return a.frame_id < b.frame_id; });
        const auto islands = build_islands(by_id, config_.max_island_gap);
        const island& best = *select_island(islands);

        r.island_range = {best.lo, best.hi};
        r.matched_id = best.best_member;
        chain_entry = r.island_range;
        const auto cs = std::find_if(qr.candidates.begin(), qr.candidates.end(),
                                     [&](const candidate_score& c) { return c.frame_id == best.best_member; });
        r.eta_w = cs->eta_w;
        r.eta_g = cs->eta_g;
        r.eta_d = cs->eta_d;
        r.eta_sim = cs->eta_sim;

        if (!check_temporal(best, history_, q.frame_id, config_)) {
            r.status = loop_status::failed_temporal;
        } else if (!config_.use_geometric) {
            r.status = loop_status::accepted;
        } else {
            const node_feature_map qmap = build_node_map(q.nodes);
            const frame_features& train = db_->features_of(best.best_member);
            const auto matches =
                match_features(q.frame, qmap, train, db_->direct_index_of(best.best_member), matching_);

            std::vector<point2> pa, pb;
            pa.reserve(matches.size());
            pb.reserve(matches.size());
            for (const correspondence& m : matches) {
                const keypoint& ka = q.frame.keypoints[m.query_idx];
                const keypoint& kb = train.keypoints[m.match_idx];
                pa.push_back({ka.x, ka.y});
                pb.push_back({kb.x, kb.y});
            }
            ransac_config rc = ransac_;
            // Decorrelate per-frame sampling while keeping runs reproducible.
            rc.seed = ransac_.seed ^ (0x9e3779b97f4a7c15ull * (q.frame_id + 1));
            const fundamental_result fr = estimate_fundamental(pa, pb, rc);
            r.inliers = fr.inlier_count;
            r.status = fr.success ? loop_status::accepted : loop_status::failed_geometric;
        }
    }
    const auto t3 = std::chrono::steady_clock::now();
    r.timings.verify_micros = micros_between(t2, t3);

    if (config_.history_accepted_only && r.status != loop_status::accepted) chain_entry.reset();
    history_.push_back(chain_entry);
    db_->commit(std::move(q));
    r.timings.total_micros = micros_between(t0, std::chrono::steady_clock::now());
    return r;
}

}  // namespace bowg
