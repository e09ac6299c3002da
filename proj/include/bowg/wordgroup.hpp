#pragma once

#include <map>
#include <span>

#include "bowg/types.hpp"

namespace bowg {

/// One word group: id is the word id itself, raw weight is the member count
/// minus one, summed over all occurrences of the word in the frame. The
/// refined weight is the TF-IDF-style value computed against the group table.
struct group_entry {
    std::uint32_t raw = 0;
    double refined = 0.0;
};

using word_group_vector = std::map<word_id_t, group_entry>;

/// Online table of cumulative word-group weights across all inserted frames.
class word_group_table {
public:
    void fold(const word_group_vector& raw) {
        for (const auto& [id, e] : raw) {
            cumulative_[id] += e.raw;
            total_ += e.raw;
        }
    }

    std::uint64_t cumulative(word_id_t id) const {
        const auto it = cumulative_.find(id);
        return it == cumulative_.end() ? 0 : it->second;
    }

    std::uint64_t total() const { return total_; }
    const std::map<word_id_t, std::uint64_t>& entries() const { return cumulative_; }

    void restore(std::map<word_id_t, std::uint64_t> entries, std::uint64_t total) {
        cumulative_ = std::move(entries);
        total_ = total;
    }

private:
    std::map<word_id_t, std::uint64_t> cumulative_;
    std::uint64_t total_ = 0;
};

/// Counts, for every feature, the other features closer than its keypoint
/// size (strict inequality), summed per word id. Groups with zero count are
/// omitted. Uses a uniform grid; results match the O(n^2) pairwise count.
word_group_vector extract_word_groups(std::span<const keypoint> keypoints,
                                      std::span<const word_id_t> word_ids);

/// Refines raw weights: w~_i = (w_i / sum_j w_j) * ln(table_total / cumulative_i).
/// The table must already include this frame's raw weights. Zero refined
/// weights are retained.
word_group_vector refine_weights(const word_group_vector& raw, const word_group_table& table);

/// Angular feature histogram around the image center, L2-normalized.
/// A featureless frame keeps its m batches, all zero.
struct distribution_vector {
    std::vector<double> batches;

    unsigned m() const { return static_cast<unsigned>(batches.size()); }
    bool is_zero() const;
};

distribution_vector compute_distribution(std::span<const keypoint> keypoints, double width,
                                         double height, unsigned m);

}  // namespace bowg
