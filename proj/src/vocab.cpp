#include "bowg/vocab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>

#include "bowg/serial.hpp"

namespace bowg {

namespace {

constexpr std::string_view k_magic = "BOWGVOC1";
constexpr unsigned k_max_lloyd_iters = 100;

double next_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// k-means++ seeding over Hamming distance, squared distance as sampling weight.
std::vector<std::uint32_t> seed_centers(const std::vector<binary_descriptor>& pool,
                                        const std::vector<std::uint32_t>& members, unsigned k,
                                        std::mt19937_64& rng) {
    std::vector<std::uint32_t> centers;
    centers.reserve(k);
    centers.push_back(members[rng() % members.size()]);

    std::vector<double> best_d2(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        const double d = hamming_distance(pool[members[i]], pool[centers[0]]);
        best_d2[i] = d * d;
    }
    while (centers.size() < k) {
        double total = 0;
        for (const double w : best_d2) total += w;
        std::uint32_t pick;
        if (total <= 0) {
            // All remaining points coincide with chosen centers; take the first
            // member not yet selected.
            std::size_t i = 0;
            while (i < members.size() &&
                   std::find(centers.begin(), centers.end(), members[i]) != centers.end())
                ++i;
            pick = members[i < members.size() ? i : 0];
        } else {
            const double r = next_unit(rng) * total;
            double acc = 0;
            std::size_t i = 0;
            for (; i + 1 < members.size(); ++i) {
                acc += best_d2[i];
                if (acc > r) break;
            }
            pick = members[i];
        }
        centers.push_back(pick);
        for (std::size_t i = 0; i < members.size(); ++i) {
            const double d = hamming_distance(pool[members[i]], pool[pick]);
            best_d2[i] = std::min(best_d2[i], d * d);
        }
    }
    return centers;
}

struct cluster_result {
    std::vector<binary_descriptor> centers;
    std::vector<std::vector<std::uint32_t>> groups;
};

cluster_result k_medians(const std::vector<binary_descriptor>& pool,
                         const std::vector<std::uint32_t>& members, unsigned k, std::mt19937_64& rng) {
    cluster_result res;
    const auto seeds = seed_centers(pool, members, k, rng);
    res.centers.reserve(k);
    for (const auto s : seeds) res.centers.push_back(pool[s]);

    std::vector<std::uint32_t> assign(members.size(), 0);
    for (unsigned iter = 0; iter < k_max_lloyd_iters; ++iter) {
        bool changed = false;
        res.groups.assign(k, {});
        for (std::size_t i = 0; i < members.size(); ++i) {
            unsigned best = hamming_distance(pool[members[i]], res.centers[0]);
            std::uint32_t best_c = 0;
            for (std::uint32_t c = 1; c < k; ++c) {
                const unsigned d = hamming_distance(pool[members[i]], res.centers[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            if (assign[i] != best_c) {
                assign[i] = best_c;
                changed = true;
            }
            res.groups[best_c].push_back(members[i]);
        }

        // Empty-cluster repair: reseed from the farthest member of the largest cluster.
        for (std::uint32_t c = 0; c < k; ++c) {
            if (!res.groups[c].empty()) continue;
            std::uint32_t largest = 0;
            for (std::uint32_t g = 1; g < k; ++g) {
                if (res.groups[g].size() > res.groups[largest].size()) largest = g;
            }
            unsigned far_d = 0;
            std::uint32_t far_m = res.groups[largest].front();
            for (const auto m : res.groups[largest]) {
                const unsigned d = hamming_distance(pool[m], res.centers[largest]);
                if (d > far_d) {
                    far_d = d;
                    far_m = m;
                }
            }
            res.centers[c] = pool[far_m];
            changed = true;
        }

        if (!changed && iter > 0) break;
        for (std::uint32_t c = 0; c < k; ++c) {
            if (!res.groups[c].empty()) res.centers[c] = majority_median(pool, res.groups[c]);
        }
    }

    // Final assignment against the converged centers.
    res.groups.assign(k, {});
    for (std::size_t i = 0; i < members.size(); ++i) {
        unsigned best = hamming_distance(pool[members[i]], res.centers[0]);
        std::uint32_t best_c = 0;
        for (std::uint32_t c = 1; c < k; ++c) {
            const unsigned d = hamming_distance(pool[members[i]], res.centers[c]);
            if (d < best) {
                best = d;
                best_c = c;
            }
        }
        res.groups[best_c].push_back(members[i]);
    }
    return res;
}

}  // namespace

binary_descriptor majority_median(std::span<const binary_descriptor> members,
                                  std::span<const std::uint32_t> indices) {
    const unsigned bits = members[indices.front()].size_bits();
    std::vector<std::uint32_t> ones(bits, 0);
    for (const auto idx : indices) {
        const auto& d = members[idx];
        for (unsigned b = 0; b < bits; ++b) {
            if (d.bit(b)) ++ones[b];
        }
    }
    binary_descriptor med(bits);
    for (unsigned b = 0; b < bits; ++b) {
        if (2 * ones[b] > indices.size()) med.set_bit(b, true);
    }
    return med;
}

vocabulary vocabulary::train(const std::vector<binary_descriptor>& pool, const vocab_config& config,
                             const std::vector<std::size_t>& image_sizes) {
    if (config.k < 2) throw std::invalid_argument("vocab_config.k must be >= 2");
    if (config.levels < 1) throw std::invalid_argument("vocab_config.levels must be >= 1");
    if (pool.size() < config.k)
        throw std::invalid_argument(
            fmt::format("descriptor pool ({}) smaller than branching factor {}", pool.size(), config.k));

    vocabulary voc;
    voc.config_ = config;
    voc.descriptor_bits_ = pool.front().size_bits();
    for (const auto& d : pool) {
        if (d.size_bits() != voc.descriptor_bits_)
            throw std::invalid_argument("descriptor pool mixes widths");
    }

    voc.nodes_.push_back(node{binary_descriptor(voc.descriptor_bits_), 0, 0, 0, invalid_frame, 0});

    struct pending {
        node_id_t id;
        std::vector<std::uint32_t> members;
    };
    std::deque<pending> queue;
    {
        std::vector<std::uint32_t> all(pool.size());
        for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
        queue.push_back({0, std::move(all)});
    }

    while (!queue.empty()) {
        auto item = std::move(queue.front());
        queue.pop_front();
        node& nd = voc.nodes_[item.id];
        const std::uint32_t level = nd.level;

        if (level >= config.levels || item.members.size() < config.k) {
            // Leaf (early when the cluster is too small to split).
            voc.nodes_[item.id].word = static_cast<word_id_t>(voc.word_to_node_.size());
            voc.word_to_node_.push_back(item.id);
            continue;
        }

        std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL ^
                            (static_cast<std::uint64_t>(item.id) + 1) * 0xBF58476D1CE4E5B9ULL);
        auto clusters = k_medians(pool, item.members, config.k, rng);

        const node_id_t first = static_cast<node_id_t>(voc.nodes_.size());
        voc.nodes_[item.id].first_child = first;
        voc.nodes_[item.id].n_children = config.k;
        for (std::uint32_t c = 0; c < config.k; ++c) {
            voc.nodes_.push_back(node{std::move(clusters.centers[c]), item.id, 0, 0, invalid_frame, level + 1});
        }
        for (std::uint32_t c = 0; c < config.k; ++c) {
            queue.push_back({first + c, std::move(clusters.groups[c])});
        }
    }

    // Per-image document frequency when image boundaries are supplied.
    voc.idf_.assign(voc.word_count(), 1.0);
    if (!image_sizes.empty()) {
        std::size_t total = 0;
        for (const auto s : image_sizes) total += s;
        if (total != pool.size())
            throw std::invalid_argument("image_sizes does not sum to the pool size");
        std::vector<std::uint32_t> doc_freq(voc.word_count(), 0);
        std::vector<bool> seen(voc.word_count());
        std::size_t off = 0;
        for (const auto sz : image_sizes) {
            std::fill(seen.begin(), seen.end(), false);
            for (std::size_t i = 0; i < sz; ++i) {
                const word_id_t w = voc.word_of(pool[off + i]);
                if (!seen[w]) {
                    seen[w] = true;
                    ++doc_freq[w];
                }
            }
            off += sz;
        }
        for (word_id_t w = 0; w < voc.word_count(); ++w) {
            voc.idf_[w] = std::log(static_cast<double>(image_sizes.size()) / std::max(doc_freq[w], 1u));
        }
    }
    return voc;
}

word_id_t vocabulary::word_of(const binary_descriptor& d) const {
    node_id_t cur = 0;
    while (nodes_[cur].n_children > 0) {
        const node_id_t first = nodes_[cur].first_child;
        unsigned best = hamming_distance(d, nodes_[first].center);
        node_id_t best_id = first;
        for (std::uint32_t c = 1; c < nodes_[cur].n_children; ++c) {
            const unsigned dist = hamming_distance(d, nodes_[first + c].center);
            if (dist < best) {
                best = dist;
                best_id = first + c;
            }
        }
        cur = best_id;
    }
    return nodes_[cur].word;
}

vocabulary::transform_result vocabulary::transform(const frame_features& frame, unsigned di_level) const {
    transform_result res;
    if (frame.descriptors.empty()) return res;
    if (frame.descriptor_bits() != descriptor_bits_)
        throw std::invalid_argument(fmt::format("frame descriptor width {} != vocabulary width {}",
                                                frame.descriptor_bits(), descriptor_bits_));

    res.words.reserve(frame.descriptors.size());
    res.nodes.reserve(frame.descriptors.size());
    std::map<word_id_t, std::uint32_t> counts;
    for (const auto& d : frame.descriptors) {
        node_id_t cur = 0;
        node_id_t at_level = 0;
        while (nodes_[cur].n_children > 0) {
            const node_id_t first = nodes_[cur].first_child;
            unsigned best = hamming_distance(d, nodes_[first].center);
            node_id_t best_id = first;
            for (std::uint32_t c = 1; c < nodes_[cur].n_children; ++c) {
                const unsigned dist = hamming_distance(d, nodes_[first + c].center);
                if (dist < best) {
                    best = dist;
                    best_id = first + c;
                }
            }
            cur = best_id;
            if (nodes_[cur].level <= di_level) at_level = cur;
        }
        res.words.push_back(nodes_[cur].word);
        res.nodes.push_back(at_level);
        ++counts[nodes_[cur].word];
    }

    double total = 0;
    for (const auto& [w, c] : counts) {
        const double weight = c * idf_[w];
        if (weight > 0) {
            res.bow[w] = weight;
            total += weight;
        }
    }
    for (auto& [w, v] : res.bow) v /= total;
    return res;
}

void vocabulary::save(std::ostream& out) const {
    out.write(k_magic.data(), static_cast<std::streamsize>(k_magic.size()));
    serial::write_u32(out, descriptor_bits_);
    serial::write_u32(out, config_.k);
    serial::write_u32(out, config_.levels);
    serial::write_u64(out, config_.seed);
    serial::write_u32(out, static_cast<std::uint32_t>(nodes_.size()));
    serial::write_u32(out, static_cast<std::uint32_t>(word_to_node_.size()));
    for (const auto& n : nodes_) {
        serial::write_u32(out, n.parent);
        serial::write_u32(out, n.first_child);
        serial::write_u32(out, n.n_children);
        serial::write_u32(out, n.word);
        serial::write_u32(out, n.level);
        serial::write_bytes(out, n.center.to_bytes());
    }
    for (const auto v : idf_) serial::write_f64(out, v);
    if (!out) throw io_error("vocabulary write failed");
}

vocabulary vocabulary::load(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::string_view(magic, 8) != k_magic)
        throw io_error("not a vocabulary file (bad magic)");

    vocabulary voc;
    voc.descriptor_bits_ = serial::read_u32(in);
    voc.config_.k = serial::read_u32(in);
    voc.config_.levels = serial::read_u32(in);
    voc.config_.seed = serial::read_u64(in);
    const auto n_nodes = serial::read_u32(in);
    const auto n_words = serial::read_u32(in);
    if (voc.descriptor_bits_ == 0 || voc.descriptor_bits_ % 8 != 0 || n_nodes == 0)
        throw io_error("vocabulary file is corrupt");

    voc.nodes_.reserve(n_nodes);
    voc.word_to_node_.assign(n_words, 0);
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
        node n;
        n.parent = serial::read_u32(in);
        n.first_child = serial::read_u32(in);
        n.n_children = serial::read_u32(in);
        n.word = serial::read_u32(in);
        n.level = serial::read_u32(in);
        const auto bytes = serial::read_bytes(in, voc.descriptor_bits_ / 8);
        n.center = binary_descriptor::from_bytes(bytes);
        if (n.word != invalid_frame) {
            if (n.word >= n_words) throw io_error("vocabulary file is corrupt (word id out of range)");
            voc.word_to_node_[n.word] = i;
        }
        voc.nodes_.push_back(std::move(n));
    }
    voc.idf_.reserve(n_words);
    for (std::uint32_t w = 0; w < n_words; ++w) voc.idf_.push_back(serial::read_f64(in));
    if (!in) throw io_error("truncated vocabulary file");
    return voc;
}

void vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(fmt::format("cannot open '{}' for writing", path.string()));
    save(out);
}

vocabulary vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open vocabulary '{}'", path.string()));
    return load(in);
}

bool vocabulary::operator==(const vocabulary& other) const {
    if (descriptor_bits_ != other.descriptor_bits_ || idf_ != other.idf_ ||
        word_to_node_ != other.word_to_node_ || nodes_.size() != other.nodes_.size())
        return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& a = nodes_[i];
        const auto& b = other.nodes_[i];
        if (a.center != b.center || a.parent != b.parent || a.first_child != b.first_child ||
            a.n_children != b.n_children || a.word != b.word || a.level != b.level)
            return false;
    }
    return true;
}

}  // namespace bowg
