#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "bowg/types.hpp"

namespace bowg {

/// Sparse TF-IDF image representation, L1-normalized (empty for featureless frames).
using bow_vector = std::map<word_id_t, double>;

enum class weighting_scheme { tf_idf };

struct vocab_config {
    unsigned k = 10;        // branching factor, >= 2
    unsigned levels = 6;    // tree depth, >= 1
    std::uint64_t seed = 0;
    weighting_scheme weighting = weighting_scheme::tf_idf;
};

/// Hierarchical vocabulary over binary descriptors. Trained offline by
/// recursive k-medians (k-means++ seeding, Hamming metric); immutable and
/// shareable across threads afterwards.
///
/// Determinism contract: ties in distance break toward the lowest node
/// index, majority-median bit ties resolve to 0, and each node's clustering
/// RNG is derived from (seed, node id), so the tree depends only on the
/// pool and the config.
class vocabulary {
public:
    struct node {
        binary_descriptor center;
        node_id_t parent = 0;
        node_id_t first_child = 0;  // 0 means none
        std::uint32_t n_children = 0;
        word_id_t word = invalid_frame;  // leaf word id, invalid for internal nodes
        std::uint32_t level = 0;
    };

    struct transform_result {
        bow_vector bow;
        std::vector<word_id_t> words;   // per feature
        std::vector<node_id_t> nodes;   // per feature, ancestor at di_level
    };

    vocabulary() = default;

    /// Trains the tree on a descriptor pool. When `image_sizes` delimits the
    /// pool into training images, per-word idf = log(n_images / n_containing);
    /// otherwise idf is uniform 1. Pool size must be >= k.
    static vocabulary train(const std::vector<binary_descriptor>& pool, const vocab_config& config,
                            const std::vector<std::size_t>& image_sizes = {});

    /// Greedy root-to-leaf descent per descriptor. Returns the L1-normalized
    /// TF-IDF vector plus per-feature word id and the ancestor node id at
    /// `di_level` (the deepest path node if the leaf sits above di_level).
    transform_result transform(const frame_features& frame, unsigned di_level) const;

    word_id_t word_of(const binary_descriptor& d) const;

    std::size_t word_count() const { return word_to_node_.size(); }
    std::size_t node_count() const { return nodes_.size(); }
    unsigned descriptor_bits() const { return descriptor_bits_; }
    const vocab_config& config() const { return config_; }
    double idf(word_id_t w) const { return idf_[w]; }
    const node& node_at(node_id_t id) const { return nodes_[id]; }
    const binary_descriptor& word_center(word_id_t w) const { return nodes_[word_to_node_[w]].center; }

    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static vocabulary load(std::istream& in);
    static vocabulary load(const std::filesystem::path& path);

    bool operator==(const vocabulary&) const;

private:
    std::vector<node> nodes_;           // level-ordered, nodes_[0] is the root
    std::vector<double> idf_;           // per word
    std::vector<node_id_t> word_to_node_;
    unsigned descriptor_bits_ = 0;
    vocab_config config_;
};

/// Bitwise-majority median; ties (equal 0/1 counts) resolve to 0.
/// Minimizes total Hamming distance to the members.
binary_descriptor majority_median(std::span<const binary_descriptor> members,
                                  std::span<const std::uint32_t> indices);

}  // namespace bowg
