#pragma once

#include <filesystem>
#include <memory>

#include "bowg/scoring.hpp"
#include "bowg/vocab.hpp"
#include "bowg/wordgroup.hpp"

namespace bowg {

struct database_config {
    unsigned di_level = 4;       // vocabulary level of the direct index (root = 0)
    unsigned m_batches = 8;      // angular batches of the distribution table
    bool refresh_refined = false;  // recompute stored refined weights at query time
};

struct posting {
    frame_id_t frame_id;
    double weight;
};

/// A frame transformed and folded into the word-group table but not yet
/// stored. Produced by prepare(), consumed by query_candidates()/commit().
struct prepared_query {
    frame_id_t frame_id = 0;
    frame_features frame;
    bow_vector bow;
    std::vector<word_id_t> words;
    std::vector<node_id_t> nodes;
    word_group_vector groups;  // refined against the post-fold table
    distribution_vector dist;
    std::int64_t transform_micros = 0;  // vocabulary descent
    std::int64_t groups_micros = 0;     // group extraction, fold, refine, distribution
};

/// Groups per-feature node ids into the per-frame direct-index map.
node_feature_map build_node_map(std::span<const node_id_t> nodes);

struct query_options {
    double alpha_threshold = 0.0;
    unsigned recent_exclusion = 20;
};

enum class query_status { ok, rejected_featureless };

struct query_result {
    query_status status = query_status::ok;
    std::vector<candidate_score> candidates;  // eta_sim descending, frame id breaks ties
};

/// The online BoWG database: word-group table, word and word-group inverse
/// indexes, direct index, and distribution table, plus per-frame storage for
/// geometric verification.
///
/// Writes (prepare/commit/add_frame) must be externally serialized against
/// reads; queries between a prepare and its commit never observe the
/// uncommitted frame.
class database {
public:
    database() = default;
    database(std::shared_ptr<const vocabulary> vocab, database_config config);

    /// Transforms the frame, extracts word groups, folds their raw weights
    /// into the group table (the online dictionary update) and refines them.
    /// Does not store the frame.
    prepared_query prepare(frame_features frame);

    /// Gathers candidates through both inverse indexes, scores them with the
    /// full pipeline (word, group, optional distribution, temporal fusion),
    /// replaces the cache with this query's scores, and returns candidates
    /// with eta_sim above the threshold. Frames within the last
    /// `recent_exclusion` ids are excluded. A self word score below the floor
    /// rejects the query as featureless.
    query_result query_candidates(const prepared_query& query, const scoring_config& scoring,
                                  const query_options& options, score_cache& cache) const;

    /// Stores the prepared frame in all tables. Ids are consecutive.
    frame_id_t commit(prepared_query&& query);

    frame_id_t add_frame(frame_features frame);

    std::size_t size() const { return frames_.size(); }
    const vocabulary& vocab() const { return *vocab_; }
    const database_config& config() const { return config_; }

    const frame_features& features_of(frame_id_t id) const { return frames_[id]; }
    const bow_vector& bow_of(frame_id_t id) const { return bows_[id]; }
    const word_group_vector& groups_of(frame_id_t id) const { return groups_[id]; }
    const distribution_vector& distribution_of(frame_id_t id) const { return dists_[id]; }
    const node_feature_map& direct_index_of(frame_id_t id) const { return direct_[id]; }
    const word_group_table& group_table() const { return table_; }

    const std::vector<posting>* word_postings(word_id_t w) const;
    const std::vector<posting>* group_postings(word_id_t g) const;

    void save(const std::filesystem::path& path) const;
    static database load(const std::filesystem::path& path);

private:
    raw_scores self_scores(const prepared_query& query, const scoring_config& scoring) const;

    std::shared_ptr<const vocabulary> vocab_;
    database_config config_;

    std::vector<frame_features> frames_;
    std::vector<bow_vector> bows_;
    std::vector<word_group_vector> groups_;
    std::vector<distribution_vector> dists_;
    std::vector<node_feature_map> direct_;

    word_group_table table_;
    std::map<word_id_t, std::vector<posting>> word_ii_;
    std::map<word_id_t, std::vector<posting>> group_ii_;
};

}  // namespace bowg
