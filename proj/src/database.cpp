#include "bowg/database.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "bowg/serial.hpp"

namespace bowg {

using namespace serial;

namespace {

constexpr char db_magic[8] = {'B', 'O', 'W', 'G', 'D', 'B', '1', '\0'};
constexpr std::uint32_t db_version = 1;

// Per-thread scratch for query_candidates; entry i is valid iff
// stamp[i] == epoch. Reused across queries (and database instances on the
// same thread) so candidate gathering never pays an O(database) clear.
struct query_scratch {
    std::vector<double> word;
    std::vector<double> group;
    std::vector<std::uint64_t> stamp;
    std::uint64_t epoch = 0;
    std::vector<frame_id_t> touched;
};

}  // namespace

database::database(std::shared_ptr<const vocabulary> vocab, database_config config)
    : vocab_(std::move(vocab)), config_(config) {
    if (!vocab_) throw std::invalid_argument("database: null vocabulary");
}

prepared_query database::prepare(frame_features frame) {
    const auto t0 = std::chrono::steady_clock::now();
    auto tr = vocab_->transform(frame, config_.di_level);
    const auto t1 = std::chrono::steady_clock::now();
    auto raw = extract_word_groups(frame.keypoints, tr.words);
    table_.fold(raw);
    prepared_query q;
    q.frame_id = static_cast<frame_id_t>(frames_.size());
    q.groups = refine_weights(raw, table_);
    q.dist = compute_distribution(frame.keypoints, frame.width, frame.height, config_.m_batches);
    const auto t2 = std::chrono::steady_clock::now();
    q.transform_micros = std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    q.groups_micros = std::chrono::duration_cast<std::chrono::microseconds>(t2 - t1).count();
    q.bow = std::move(tr.bow);
    q.words = std::move(tr.words);
    q.nodes = std::move(tr.nodes);
    q.frame = std::move(frame);
    return q;
}

raw_scores database::self_scores(const prepared_query& query, const scoring_config& scoring) const {
    const frame_id_t prev = static_cast<frame_id_t>(frames_.size() - 1);
    raw_scores self;
    self.word = word_score(query.bow, bows_[prev]);
    self.group = word_group_score(query.groups, groups_[prev]);
    if (scoring.use_distribution)
        self.dist = distribution_score(query.dist, dists_[prev], scoring.distribution_literal_max);
    return self;
}

query_result database::query_candidates(const prepared_query& query, const scoring_config& scoring,
                                        const query_options& options, score_cache& cache) const {
    query_result result;
    if (frames_.empty()) {
        cache.replace({});
        return result;
    }

    const raw_scores self = self_scores(query, scoring);
    if (self.word < scoring.min_self_score) {
        result.status = query_status::rejected_featureless;
        cache.replace({});
        return result;
    }

    // A candidate is admissible when it predates the dissimilarity window.
    const auto admissible = [&](frame_id_t id) {
        return id + options.recent_exclusion < query.frame_id;
    };

    // Word similarity accumulates min(w_query, w_stored) over the shared
    // support; the group kernel accumulates the refined-weight dot product.
    // Touching a frame gathers it even when the contribution is zero.
    // The accumulators are dense arrays indexed by frame id, epoch-stamped so
    // each query invalidates the previous sums without a clear pass: the cost
    // stays proportional to the touched postings, with no per-candidate
    // hash-map overhead. Thread-local keeps concurrent readers race-free.
    thread_local query_scratch scratch;
    scratch.epoch++;
    if (scratch.stamp.size() < frames_.size()) {
        scratch.stamp.resize(frames_.size(), 0);
        scratch.word.resize(frames_.size());
        scratch.group.resize(frames_.size());
    }
    scratch.touched.clear();
    const auto touch = [&](frame_id_t id) {
        if (scratch.stamp[id] != scratch.epoch) {
            scratch.stamp[id] = scratch.epoch;
            scratch.word[id] = 0.0;
            scratch.group[id] = 0.0;
            scratch.touched.push_back(id);
        }
    };
    for (const auto& [w, qw] : query.bow) {
        auto it = word_ii_.find(w);
        if (it == word_ii_.end()) continue;
        for (const posting& p : it->second) {
            if (!admissible(p.frame_id)) continue;
            touch(p.frame_id);
            scratch.word[p.frame_id] += std::min(qw, p.weight);
        }
    }
    if (config_.refresh_refined) {
        for (const auto& [g, entry] : query.groups) {
            auto it = group_ii_.find(g);
            if (it == group_ii_.end()) continue;
            const double idf =
                std::log(static_cast<double>(table_.total()) / static_cast<double>(table_.cumulative(g)));
            for (const posting& p : it->second) {
                if (!admissible(p.frame_id)) continue;
                // Recompute the stored frame's tf against the current table;
                // the frame total is time-invariant so only idf drifts.
                const auto& stored = groups_[p.frame_id];
                double frame_total = 0.0;
                for (const auto& [gid, e] : stored) frame_total += e.raw;
                const double tf = stored.at(g).raw / frame_total;
                touch(p.frame_id);
                scratch.group[p.frame_id] += entry.refined * tf * idf;
            }
        }
    } else {
        for (const auto& [g, entry] : query.groups) {
            auto it = group_ii_.find(g);
            if (it == group_ii_.end()) continue;
            for (const posting& p : it->second) {
                if (!admissible(p.frame_id)) continue;
                touch(p.frame_id);
                scratch.group[p.frame_id] += entry.refined * p.weight;
            }
        }
    }

    // Scores are per-candidate independent and the final sort is keyed on
    // (eta_sim, id), so the touch order never shows in the output. The cache
    // serves the previous query's scores until the staged ones are committed.
    cache.begin_staging(frames_.size());
    result.candidates.reserve(scratch.touched.size());
    for (frame_id_t id : scratch.touched) {
        raw_scores raw;
        raw.word = scratch.word[id];
        const double p = scratch.group[id];
        raw.group = p > 1.0 ? 1.0 : 1.0 - std::sqrt(1.0 - p);
        if (scoring.use_distribution)
            raw.dist = distribution_score(query.dist, dists_[id], scoring.distribution_literal_max);
        const candidate_score cs = score_query(id, raw, self, cache, scoring);
        cache.stage(id, cs.eta_sim);
        if (cs.eta_sim > options.alpha_threshold) result.candidates.push_back(cs);
    }
    cache.commit_staging();

    std::stable_sort(result.candidates.begin(), result.candidates.end(),
                     [](const candidate_score& a, const candidate_score& b) {
                         if (a.eta_sim != b.eta_sim) return a.eta_sim > b.eta_sim;
                         return a.frame_id < b.frame_id;
                     });
    return result;
}

node_feature_map build_node_map(std::span<const node_id_t> nodes) {
    std::map<node_id_t, std::vector<std::uint32_t>> by_node;
    for (std::uint32_t i = 0; i < nodes.size(); ++i) by_node[nodes[i]].push_back(i);
    return node_feature_map(by_node.begin(), by_node.end());
}

frame_id_t database::commit(prepared_query&& query) {
    const frame_id_t id = static_cast<frame_id_t>(frames_.size());
    if (query.frame_id != id)
        throw std::logic_error(
            fmt::format("database: committing frame {} but next id is {}", query.frame_id, id));

    for (const auto& [w, weight] : query.bow) word_ii_[w].push_back({id, weight});
    for (const auto& [g, entry] : query.groups) group_ii_[g].push_back({id, entry.refined});

    node_feature_map di = build_node_map(query.nodes);

    bows_.push_back(std::move(query.bow));
    groups_.push_back(std::move(query.groups));
    dists_.push_back(std::move(query.dist));
    direct_.push_back(std::move(di));
    frames_.push_back(std::move(query.frame));
    return id;
}

frame_id_t database::add_frame(frame_features frame) { return commit(prepare(std::move(frame))); }

const std::vector<posting>* database::word_postings(word_id_t w) const {
    auto it = word_ii_.find(w);
    return it == word_ii_.end() ? nullptr : &it->second;
}

const std::vector<posting>* database::group_postings(word_id_t g) const {
    auto it = group_ii_.find(g);
    return it == group_ii_.end() ? nullptr : &it->second;
}

namespace {

void write_postings(std::ostream& out, const std::map<word_id_t, std::vector<posting>>& index) {
    write_u64(out, index.size());
    for (const auto& [id, plist] : index) {
        write_u32(out, id);
        write_u64(out, plist.size());
        for (const posting& p : plist) {
            write_u32(out, p.frame_id);
            write_f64(out, p.weight);
        }
    }
}

std::map<word_id_t, std::vector<posting>> read_postings(std::istream& in) {
    std::map<word_id_t, std::vector<posting>> index;
    const std::uint64_t n = read_u64(in);
    for (std::uint64_t i = 0; i < n; ++i) {
        const word_id_t id = read_u32(in);
        const std::uint64_t count = read_u64(in);
        auto& plist = index[id];
        plist.resize(count);
        for (auto& p : plist) {
            p.frame_id = read_u32(in);
            p.weight = read_f64(in);
        }
    }
    return index;
}

void write_frame(std::ostream& out, const frame_features& f) {
    write_u32(out, f.frame_id);
    write_f64(out, f.timestamp);
    write_u32(out, f.width);
    write_u32(out, f.height);
    write_u32(out, static_cast<std::uint32_t>(f.keypoints.size()));
    for (const keypoint& kp : f.keypoints) {
        write_f64(out, kp.x);
        write_f64(out, kp.y);
        write_f64(out, kp.size);
        write_f64(out, kp.angle ? *kp.angle : std::numeric_limits<double>::quiet_NaN());
        write_u32(out, static_cast<std::uint32_t>(kp.octave));
    }
    const std::uint32_t bits = f.descriptors.empty() ? 0 : f.descriptors[0].size_bits();
    write_u32(out, bits);
    for (const binary_descriptor& d : f.descriptors) {
        auto bytes = d.to_bytes();
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
}

frame_features read_frame(std::istream& in) {
    frame_features f;
    f.frame_id = read_u32(in);
    f.timestamp = read_f64(in);
    f.width = read_u32(in);
    f.height = read_u32(in);
    const std::uint32_t n = read_u32(in);
    f.keypoints.resize(n);
    for (keypoint& kp : f.keypoints) {
        kp.x = read_f64(in);
        kp.y = read_f64(in);
        kp.size = read_f64(in);
        const double angle = read_f64(in);
        if (!std::isnan(angle)) kp.angle = angle;
        kp.octave = static_cast<int>(read_u32(in));
    }
    const std::uint32_t bits = read_u32(in);
    f.descriptors.reserve(n);
    const std::size_t nbytes = (bits + 7) / 8;
    std::vector<std::uint8_t> buf(nbytes);
    for (std::uint32_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(nbytes));
        if (!in) throw io_error("truncated file");
        f.descriptors.push_back(binary_descriptor::from_bytes(buf));
    }
    return f;
}

}  // namespace

void database::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error(fmt::format("cannot open {} for writing", path.string()));

    out.write(db_magic, sizeof(db_magic));
    write_u32(out, db_version);
    vocab_->save(out);
    write_u32(out, config_.di_level);
    write_u32(out, config_.m_batches);
    write_u32(out, config_.refresh_refined ? 1 : 0);

    write_u64(out, table_.total());
    const auto& entries = table_.entries();
    write_u64(out, entries.size());
    for (const auto& [g, cum] : entries) {
        write_u32(out, g);
        write_u64(out, cum);
    }

    write_u64(out, frames_.size());
    for (std::size_t i = 0; i < frames_.size(); ++i) {
        write_frame(out, frames_[i]);
        write_u64(out, bows_[i].size());
        for (const auto& [w, weight] : bows_[i]) {
            write_u32(out, w);
            write_f64(out, weight);
        }
        write_u64(out, groups_[i].size());
        for (const auto& [g, entry] : groups_[i]) {
            write_u32(out, g);
            write_u32(out, entry.raw);
            write_f64(out, entry.refined);
        }
        write_u32(out, static_cast<std::uint32_t>(dists_[i].batches.size()));
        for (double b : dists_[i].batches) write_f64(out, b);
        write_u64(out, direct_[i].size());
        for (const auto& [node, feats] : direct_[i]) {
            write_u32(out, node);
            write_u64(out, feats.size());
            for (std::uint32_t fi : feats) write_u32(out, fi);
        }
    }
    write_postings(out, word_ii_);
    write_postings(out, group_ii_);
    if (!out) throw io_error(fmt::format("write to {} failed", path.string()));
}

database database::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open {}", path.string()));

    char magic[sizeof(db_magic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, db_magic, sizeof(db_magic)) != 0)
        throw parse_error(fmt::format("{}: not a database snapshot", path.string()));
    const std::uint32_t version = read_u32(in);
    if (version != db_version)
        throw parse_error(fmt::format("{}: unsupported snapshot version {}", path.string(), version));

    database db;
    db.vocab_ = std::make_shared<const vocabulary>(vocabulary::load(in));
    db.config_.di_level = read_u32(in);
    db.config_.m_batches = read_u32(in);
    db.config_.refresh_refined = read_u32(in) != 0;

    const std::uint64_t total = read_u64(in);
    const std::uint64_t n_groups = read_u64(in);
    std::map<word_id_t, std::uint64_t> entries;
    for (std::uint64_t i = 0; i < n_groups; ++i) {
        const word_id_t g = read_u32(in);
        entries[g] = read_u64(in);
    }
    db.table_.restore(std::move(entries), total);

    const std::uint64_t n_frames = read_u64(in);
    db.frames_.reserve(n_frames);
    for (std::uint64_t i = 0; i < n_frames; ++i) {
        db.frames_.push_back(read_frame(in));
        bow_vector bow;
        const std::uint64_t n_words = read_u64(in);
        for (std::uint64_t j = 0; j < n_words; ++j) {
            const word_id_t w = read_u32(in);
            bow[w] = read_f64(in);
        }
        db.bows_.push_back(std::move(bow));
        word_group_vector groups;
        const std::uint64_t ng = read_u64(in);
        for (std::uint64_t j = 0; j < ng; ++j) {
            const word_id_t g = read_u32(in);
            group_entry e;
            e.raw = read_u32(in);
            e.refined = read_f64(in);
            groups[g] = e;
        }
        db.groups_.push_back(std::move(groups));
        distribution_vector dist;
        dist.batches.resize(read_u32(in));
        for (double& b : dist.batches) b = read_f64(in);
        db.dists_.push_back(std::move(dist));
        node_feature_map di;
        const std::uint64_t nn = read_u64(in);
        di.reserve(nn);
        for (std::uint64_t j = 0; j < nn; ++j) {
            const node_id_t node = read_u32(in);
            std::vector<std::uint32_t> feats(read_u64(in));
            for (auto& fi : feats) fi = read_u32(in);
            di.emplace_back(node, std::move(feats));
        }
        db.direct_.push_back(std::move(di));
    }
    db.word_ii_ = read_postings(in);
    db.group_ii_ = read_postings(in);
    return db;
}

}  // namespace bowg
