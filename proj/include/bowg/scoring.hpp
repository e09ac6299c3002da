#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bowg/vocab.hpp"
#include "bowg/wordgroup.hpp"

namespace bowg {

struct scoring_config {
    double lambda1 = 0.5;           // weight of eta_w (0.4 is the suggested start with distribution on)
    double lambda2 = 0.4;           // weight of eta_g, used only with distribution scoring
    bool use_distribution = false;
    double w_max = 0.6;             // maximum previous-score weight
    double alpha_temporal = 0.1;    // score-difference scale of the adaptive weighting
    double min_self_score = 0.005;  // normalization floor
    bool distribution_literal_max = false;  // raw max-over-shifts distance instead of best alignment
};

/// Similarity scores of the previous query, keyed by candidate frame id.
/// Replaced wholesale after each query. Stored double-buffered in
/// epoch-stamped dense arrays so a streaming database can stage thousands of
/// entries per frame at array-write cost while lookups stay O(1); ids beyond
/// the dense hint fall back to a small overflow map.
class score_cache {
public:
    using map_type = std::unordered_map<frame_id_t, double>;

    std::optional<double> lookup(frame_id_t id) const {
        if (id < cur_.stamps.size() && cur_.stamps[id] == cur_.epoch) return cur_.etas[id];
        if (const auto it = cur_.overflow.find(id); it != cur_.overflow.end()) return it->second;
        return std::nullopt;
    }

    /// Opens a staging buffer for the next wholesale replacement; lookups
    /// keep serving the previous contents until commit_staging(). Ids below
    /// dense_hint are stored densely.
    void begin_staging(std::size_t dense_hint) {
        ++stage_.epoch;
        if (stage_.stamps.size() < dense_hint) {
            stage_.stamps.resize(dense_hint, 0);
            stage_.etas.resize(dense_hint);
        }
        stage_.overflow.clear();
        stage_.count = 0;
    }

    void stage(frame_id_t id, double eta) {
        if (id < stage_.stamps.size()) {
            if (stage_.stamps[id] != stage_.epoch) {
                stage_.stamps[id] = stage_.epoch;
                ++stage_.count;
            }
            stage_.etas[id] = eta;
        } else if (stage_.overflow.insert_or_assign(id, eta).second) {
            ++stage_.count;
        }
    }

    void commit_staging() { std::swap(cur_, stage_); }

    void replace(map_type scores) {
        begin_staging(0);
        for (const auto& [id, eta] : scores) stage(id, eta);
        commit_staging();
    }

    void clear() { replace({}); }
    std::size_t size() const { return cur_.count; }

private:
    struct buffer {
        std::vector<double> etas;
        std::vector<std::uint64_t> stamps;  // entry valid iff stamps[id] == epoch
        std::uint64_t epoch = 0;            // bumped by begin_staging, so always >= 1 when staged
        map_type overflow;
        std::size_t count = 0;
    };
    buffer cur_, stage_;
};

/// L1 score between L1-normalized vectors: 1 - 0.5*||v1 - v2||_1, which
/// equals the sum of min weights over the shared support. Empty input -> 0.
double word_score(const bow_vector& v1, const bow_vector& v2);

/// p = sum_i w1~(i) * w2~(i); returns 1 when p > 1, else 1 - sqrt(1 - p).
double word_group_score(const word_group_vector& g1, const word_group_vector& g2);

/// Normalizes a raw score by the self score against the closest previous
/// image. The featureless-frame floor check happens upstream; self must be
/// positive here.
double normalize_score(double raw, double self);

/// lambda1*eta_w + (1-lambda1)*eta_g, or the three-way form when the
/// distribution score is present.
double combine(double eta_w, double eta_g, std::optional<double> eta_d, const scoring_config& config);

/// Adaptive previous-score weight: w_max / (1 + ((eta_now - eta_prev)/alpha)^2).
double previous_weight(double eta_now, double eta_prev, const scoring_config& config);

/// w_prev*eta_prev + (1-w_prev)*eta_now. A missing previous score counts as 0.
double temporal_fuse(double eta_now, std::optional<double> eta_prev, const scoring_config& config);

/// Best cyclic alignment of the two angular histograms mapped to [0,1]
/// (1 - d_min/sqrt(2)). With literal_max, the raw maximum L2 distance over
/// shifts is returned instead. Zero vectors score 0; m must match.
double distribution_score(const distribution_vector& a, const distribution_vector& b,
                          bool literal_max = false);

struct raw_scores {
    double word = 0.0;
    double group = 0.0;
    double dist = 0.0;
};

struct candidate_score {
    frame_id_t frame_id = invalid_frame;
    double eta_w = 0.0;
    double eta_g = 0.0;
    double eta_d = 0.0;   // 0 when distribution scoring is off
    double eta_sim = 0.0; // combined and temporally fused
};

/// Full per-candidate scoring: normalize each raw score against the self
/// scores, combine, then fuse with the previous query's score for candidate
/// id-1. The group and distribution normalizers are clamped at the floor;
/// the word-score floor rejection happens upstream.
candidate_score score_query(frame_id_t candidate, const raw_scores& raw, const raw_scores& self,
                            const score_cache& cache, const scoring_config& config);

}  // namespace bowg
