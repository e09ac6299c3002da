#include "bowg/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace bowg {

namespace {

std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
    h ^= (v + 0x9e3779b97f4a7c15ull) + (h << 6) + (h >> 2);
    return h * 0xbf58476d1ce4e5b9ull;
}

std::mt19937_64 sub_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(mix_seed(mix_seed(mix_seed(seed, tag), a), b));
}

binary_descriptor random_descriptor(std::mt19937_64& rng, unsigned bits) {
    std::vector<std::uint8_t> bytes(bits / 8);
    for (auto& byte : bytes) byte = static_cast<std::uint8_t>(rng() & 0xff);
    return binary_descriptor::from_bytes(bytes);
}

/// Flips `n` positions sampled with replacement (an even resample of a
/// position cancels out, which is acceptable noise semantics).
binary_descriptor noisy_copy(const binary_descriptor& d, std::mt19937_64& rng, unsigned n) {
    binary_descriptor out = d;
    for (unsigned i = 0; i < n; ++i) {
        const unsigned pos = static_cast<unsigned>(rng() % d.size_bits());
        out.set_bit(pos, !out.bit(pos));
    }
    return out;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<std::uint32_t> sample_indices(std::mt19937_64& rng, std::uint32_t n, std::uint32_t count) {
    std::vector<std::uint32_t> all(n);
    for (std::uint32_t i = 0; i < n; ++i) all[i] = i;
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint32_t j = k + static_cast<std::uint32_t>(rng() % (n - k));
        std::swap(all[k], all[j]);
    }
    all.resize(count);
    return all;
}

}  // namespace

ground_truth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error(fmt::format("cannot open {}", path.string()));
    ground_truth gt;
    std::string line;
    unsigned line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s = line;
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
        if (s.empty()) continue;
        if (s.front() == '#') {
            unsigned tol = 0;
            if (std::sscanf(line.c_str(), "# tolerance %u", &tol) == 1) gt.tolerance = tol;
            continue;
        }
        frame_id_t q = 0, m = 0;
        if (std::sscanf(line.c_str(), "%u %u", &q, &m) != 2)
            throw parse_error(fmt::format("{}:{}: expected 'query match'", path.string(), line_no));
        if (m >= q)
            throw parse_error(
                fmt::format("{}:{}: match id {} not below query id {}", path.string(), line_no, m, q));
        gt.pairs.emplace_back(q, m);
    }
    return gt;
}

void save_ground_truth(const ground_truth& gt, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error(fmt::format("cannot open {} for writing", path.string()));
    out << fmt::format("# tolerance {}\n", gt.tolerance);
    auto pairs = gt.pairs;
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [q, m] : pairs) out << fmt::format("{} {}\n", q, m);
    if (!out) throw io_error(fmt::format("write to {} failed", path.string()));
}

ground_truth ground_truth_from_matrix(const std::filesystem::path& path, unsigned tolerance) {
    std::ifstream in(path);
    if (!in) throw io_error(fmt::format("cannot open {}", path.string()));
    ground_truth gt;
    gt.tolerance = tolerance;
    std::vector<std::vector<int>> rows;
    std::string line;
    unsigned line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<int> row;
        const char* p = line.c_str();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r')) ++p;
            if (p >= end) break;
            int v = 0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{})
                throw parse_error(fmt::format("{}:{}: not a boolean matrix row", path.string(), line_no));
            row.push_back(v);
            p = next;
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw parse_error(fmt::format("{}:{}: ragged matrix row", path.string(), line_no));
        rows.push_back(std::move(row));
    }
    if (rows.size() != (rows.empty() ? 0 : rows.front().size()))
        throw parse_error(fmt::format("{}: matrix is {}x{}, expected square", path.string(), rows.size(),
                                      rows.empty() ? 0 : rows.front().size()));
    for (std::uint32_t i = 0; i < rows.size(); ++i)
        for (std::uint32_t j = 0; j < i; ++j)
            if (rows[i][j] != 0) gt.pairs.emplace_back(i, j);
    return gt;
}

namespace {

std::string format_id(frame_id_t id) { return id == invalid_frame ? "-1" : fmt::format("{}", id); }

constexpr std::string_view k_results_header =
    "frame_id,status,matched_id,eta_w,eta_g,eta_d,eta_sim,island_lo,island_hi,inliers,micros";

}  // namespace

void write_results_csv(std::ostream& out, std::span<const loop_result> results) {
    out << k_results_header << '\n';
    for (const loop_result& r : results) {
        std::string status{status_name(r.status)};
        if (r.featureless) status += "(featureless)";
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.frame_id, status,
                           format_id(r.matched_id), r.eta_w, r.eta_g, r.eta_d, r.eta_sim,
                           format_id(r.island_range.lo), format_id(r.island_range.hi), r.inliers,
                           r.timings.total_micros);
    }
}

void write_results_csv(const std::filesystem::path& path, std::span<const loop_result> results) {
    std::ofstream out(path);
    if (!out) throw io_error(fmt::format("cannot open {} for writing", path.string()));
    write_results_csv(out, results);
    if (!out) throw io_error(fmt::format("write to {} failed", path.string()));
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

frame_id_t parse_id(std::string_view s, std::string_view context) {
    if (s == "-1") return invalid_frame;
    frame_id_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw parse_error(fmt::format("{}: bad frame id '{}'", context, s));
    return v;
}

double parse_double_field(std::string_view s, std::string_view context) {
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw parse_error(fmt::format("{}: bad number '{}'", context, s));
    return v;
}

}  // namespace

std::vector<loop_result> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error(fmt::format("cannot open {}", path.string()));
    std::vector<loop_result> results;
    std::string line;
    unsigned line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string context = fmt::format("{}:{}", path.string(), line_no);
        if (line_no == 1) {
            if (line != k_results_header)
                throw parse_error(fmt::format("{}: not a loop-results CSV", context));
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 11) throw parse_error(fmt::format("{}: expected 11 fields, got {}", context, f.size()));
        loop_result r;
        r.frame_id = parse_id(f[0], context);
        std::string_view status = f[1];
        r.featureless = status.ends_with("(featureless)");
        const auto parsed = status_from_name(status);
        if (!parsed) throw parse_error(fmt::format("{}: unknown status '{}'", context, status));
        r.status = *parsed;
        r.matched_id = parse_id(f[2], context);
        r.eta_w = parse_double_field(f[3], context);
        r.eta_g = parse_double_field(f[4], context);
        r.eta_d = parse_double_field(f[5], context);
        r.eta_sim = parse_double_field(f[6], context);
        r.island_range.lo = parse_id(f[7], context);
        r.island_range.hi = parse_id(f[8], context);
        r.inliers = static_cast<unsigned>(parse_double_field(f[9], context));
        r.timings.total_micros = static_cast<std::int64_t>(parse_double_field(f[10], context));
        results.push_back(r);
    }
    return results;
}

void write_timing_csv(std::ostream& out, std::span<const loop_result> results) {
    out << "frame_id,transform_micros,groups_micros,query_micros,verify_micros,total_micros\n";
    for (const loop_result& r : results)
        out << fmt::format("{},{},{},{},{},{}\n", r.frame_id, r.timings.transform_micros,
                           r.timings.groups_micros, r.timings.query_micros, r.timings.verify_micros,
                           r.timings.total_micros);
}

void write_timing_csv(const std::filesystem::path& path, std::span<const loop_result> results) {
    std::ofstream out(path);
    if (!out) throw io_error(fmt::format("cannot open {} for writing", path.string()));
    write_timing_csv(out, results);
    if (!out) throw io_error(fmt::format("write to {} failed", path.string()));
}

loop_detector make_detector(std::shared_ptr<const vocabulary> vocab, const run_settings& settings) {
    auto db = std::make_shared<database>(std::move(vocab), settings.database);
    return loop_detector(std::move(db), settings.loop, settings.scoring, settings.matching,
                         settings.ransac);
}

std::vector<loop_result> replay(loop_detector& detector, std::span<const frame_features> frames) {
    std::vector<loop_result> results;
    results.reserve(frames.size());
    for (const frame_features& f : frames) results.push_back(detector.detect(f));
    return results;
}

stat_summary summarize(std::span<const double> values) {
    stat_summary s;
    if (values.empty()) return s;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    s.median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    s.max = sorted.back();
    for (const double v : sorted) s.mean += v;
    s.mean /= static_cast<double>(n);
    double var = 0;
    for (const double v : sorted) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(n));
    return s;
}

eval_report evaluate(std::span<const loop_result> results, const ground_truth& gt, unsigned tolerance) {
    eval_report report;

    std::map<frame_id_t, std::vector<frame_id_t>> gt_by_query;
    for (const auto& [q, m] : gt.pairs) gt_by_query[q].push_back(m);
    report.gt_queries = static_cast<unsigned>(gt_by_query.size());

    struct detection {
        double eta;
        bool is_tp;
    };
    std::vector<detection> detections;
    for (const loop_result& r : results) {
        if (r.status != loop_status::accepted) continue;
        bool is_tp = false;
        if (const auto it = gt_by_query.find(r.frame_id); it != gt_by_query.end()) {
            for (const frame_id_t g : it->second) {
                const auto diff = std::abs(static_cast<std::int64_t>(r.matched_id) - static_cast<std::int64_t>(g));
                if (diff <= static_cast<std::int64_t>(tolerance)) {
                    is_tp = true;
                    break;
                }
            }
        }
        detections.push_back({r.eta_sim, is_tp});
        if (is_tp)
            ++report.tp;
        else
            ++report.fp;
    }
    report.detections = static_cast<unsigned>(detections.size());
    report.no_detections = detections.empty();
    report.precision =
        detections.empty() ? 1.0 : static_cast<double>(report.tp) / static_cast<double>(report.tp + report.fp);
    report.recall =
        report.gt_queries ? static_cast<double>(report.tp) / static_cast<double>(report.gt_queries) : 0.0;
    report.fn = report.gt_queries - report.tp;
    report.f1 = (report.precision + report.recall) > 0
                    ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                    : 0.0;

    // Sweep alpha downwards over the recorded scores.
    std::sort(detections.begin(), detections.end(), [](const detection& a, const detection& b) {
        if (a.eta != b.eta) return a.eta > b.eta;
        return a.is_tp > b.is_tp;
    });
    unsigned tp = 0, fp = 0;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        if (detections[i].is_tp)
            ++tp;
        else
            ++fp;
        const bool boundary = i + 1 == detections.size() || detections[i + 1].eta != detections[i].eta;
        if (!boundary) continue;
        pr_point pt;
        pt.alpha = detections[i].eta;
        pt.tp = tp;
        pt.fp = fp;
        pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        pt.recall = report.gt_queries ? static_cast<double>(tp) / static_cast<double>(report.gt_queries) : 0.0;
        report.curve.push_back(pt);
    }
    for (const pr_point& pt : report.curve) {
        if (pt.fp == 0 && pt.tp > 0)
            report.recall_at_full_precision = std::max(report.recall_at_full_precision, pt.recall);
    }
    double prev_r = 0.0;
    double prev_p = report.curve.empty() ? 1.0 : report.curve.front().precision;
    for (const pr_point& pt : report.curve) {
        report.auc += (pt.recall - prev_r) * (prev_p + pt.precision) / 2.0;
        prev_r = pt.recall;
        prev_p = pt.precision;
    }

    std::vector<double> micros;
    micros.reserve(results.size());
    for (const loop_result& r : results) micros.push_back(static_cast<double>(r.timings.total_micros));
    report.total_micros = summarize(micros);
    return report;
}

namespace {

struct place_layout {
    // Cliques of pool indices plus the slot each clique occupies.
    std::vector<std::vector<std::uint32_t>> cliques;
    std::vector<point2> slot_centers;
};

/// Angular shape of an area: where its clique slots sit. Distinct shapes
/// (uniform ring, two arcs, one arc, three arcs) keep the angular
/// distributions apart even under the scorer's cyclic alignment.
double slot_angle(unsigned area, unsigned slot, unsigned n_slots, double place_offset) {
    constexpr double tau = 2.0 * std::numbers::pi;
    unsigned arcs = 1;
    double width = tau;
    switch (area % 4) {
        case 0: break;
        case 1:
            arcs = 2;
            width = tau / 3.0;
            break;
        case 2:
            arcs = 1;
            width = tau / 3.0;
            break;
        case 3:
            arcs = 3;
            width = tau / 6.0;
            break;
    }
    const unsigned per_arc = (n_slots + arcs - 1) / arcs;
    const unsigned arc = slot % arcs;
    const unsigned idx = slot / arcs;
    return arc * (tau / arcs) + (idx + 0.5) * (width / per_arc) + place_offset;
}

place_layout make_layout(const synth_config& cfg, const std::vector<std::uint32_t>& area_rank,
                         unsigned area, unsigned place) {
    auto rng = sub_rng(cfg.seed, 'W', area, place);
    std::vector<std::uint32_t> words =
        sample_indices(rng, cfg.pool_size, cfg.words_per_place);
    // The area's permutation decides which words land in which clique size,
    // so areas sharing the same words still differ in co-occurrence counts.
    std::sort(words.begin(), words.end(),
              [&](std::uint32_t a, std::uint32_t b) { return area_rank[a] < area_rank[b]; });

    place_layout layout;
    const unsigned third = cfg.words_per_place / 3;
    std::size_t next = 0;
    for (const unsigned size : {2u, 3u, 6u}) {
        for (unsigned c = 0; c < third / size; ++c) {
            std::vector<std::uint32_t> clique(words.begin() + next, words.begin() + next + size);
            next += size;
            layout.cliques.push_back(std::move(clique));
        }
    }

    const double place_offset = (uniform01(rng) - 0.5) * std::numbers::pi / 16.0;
    const double cx = cfg.width / 2.0;
    const double cy = cfg.height / 2.0;
    const double dim = std::min(cfg.width, cfg.height);
    const unsigned n_slots = static_cast<unsigned>(layout.cliques.size());
    for (unsigned s = 0; s < n_slots; ++s) {
        const double theta = slot_angle(area, s, n_slots, place_offset);
        const double radius = (0.19 + 0.125 * (s % 3)) * dim;
        layout.slot_centers.push_back({cx + radius * std::cos(theta), cy + radius * std::sin(theta)});
    }
    return layout;
}

frame_features render_place(const synth_config& cfg, const std::vector<binary_descriptor>& pool,
                            const place_layout& layout, frame_id_t fid) {
    auto rng = sub_rng(cfg.seed, 'F', fid);

    std::uint32_t n_words = 0;
    for (const auto& c : layout.cliques) n_words += static_cast<std::uint32_t>(c.size());
    std::vector<bool> dropped(n_words, false);
    for (const auto i : sample_indices(rng, n_words, std::min(cfg.dropped_words, n_words))) dropped[i] = true;

    frame_features f;
    f.frame_id = fid;
    f.timestamp = fid * 0.1;
    f.width = static_cast<int>(cfg.width);
    f.height = static_cast<int>(cfg.height);

    constexpr double clique_radius = 8.0;
    constexpr double kp_size = 30.0;
    std::uint32_t word_index = 0;
    for (std::size_t c = 0; c < layout.cliques.size(); ++c) {
        const auto& clique = layout.cliques[c];
        const point2 center = layout.slot_centers[c];
        for (std::size_t m = 0; m < clique.size(); ++m, ++word_index) {
            if (dropped[word_index]) continue;
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(clique.size());
            keypoint kp;
            kp.x = center.x + clique_radius * std::cos(phi) + (uniform01(rng) * 2.0 - 1.0) * cfg.jitter_px;
            kp.y = center.y + clique_radius * std::sin(phi) + (uniform01(rng) * 2.0 - 1.0) * cfg.jitter_px;
            kp.x = std::clamp(kp.x, 5.0, cfg.width - 5.0);
            kp.y = std::clamp(kp.y, 5.0, cfg.height - 5.0);
            kp.size = kp_size;
            f.keypoints.push_back(kp);
            f.descriptors.push_back(noisy_copy(pool[clique[m]], rng, cfg.noise_bits));
        }
    }
    return f;
}

}  // namespace

synth_output generate_aliasing(const synth_config& cfg) {
    if (cfg.words_per_place % 18 != 0)
        throw std::invalid_argument("words_per_place must be a multiple of 18 (clique profile 2/3/6)");
    if (cfg.pool_size < cfg.words_per_place)
        throw std::invalid_argument("pool_size must be >= words_per_place");
    if (cfg.areas < 2) throw std::invalid_argument("need at least 2 areas");
    if (cfg.descriptor_bits % 8 != 0) throw std::invalid_argument("descriptor_bits must be a multiple of 8");

    synth_output out;

    auto pool_rng = sub_rng(cfg.seed, 'P');
    std::vector<binary_descriptor> pool;
    pool.reserve(cfg.pool_size);
    for (unsigned i = 0; i < cfg.pool_size; ++i) pool.push_back(random_descriptor(pool_rng, cfg.descriptor_bits));

    // Per-area word ranking (decides clique-size assignment).
    std::vector<std::vector<std::uint32_t>> area_rank(cfg.areas, std::vector<std::uint32_t>(cfg.pool_size));
    for (unsigned a = 0; a < cfg.areas; ++a) {
        auto rng = sub_rng(cfg.seed, 'A', a);
        auto order = sample_indices(rng, cfg.pool_size, cfg.pool_size);
        for (std::uint32_t rank = 0; rank < order.size(); ++rank) area_rank[a][order[rank]] = rank;
    }

    std::vector<std::vector<place_layout>> layouts(cfg.areas);
    for (unsigned a = 0; a < cfg.areas; ++a)
        for (unsigned p = 0; p < cfg.places_per_area; ++p)
            layouts[a].push_back(make_layout(cfg, area_rank[a], a, p));

    const frame_id_t area0_frames = cfg.places_per_area * cfg.frames_per_place;
    const frame_id_t walk_frames = cfg.areas * area0_frames;
    out.revisit_start = walk_frames;

    // Injection positions for the spurious look-alikes, spread across the
    // non-area-0 part of the walk.
    std::map<frame_id_t, unsigned> spurious_at;
    if (cfg.spurious > 0) {
        const frame_id_t lo = area0_frames;
        const frame_id_t len = walk_frames - lo;
        const frame_id_t stride = len / (cfg.spurious + 1);
        if (stride < 4) throw std::invalid_argument("too many spurious frames for the walk length");
        for (unsigned i = 0; i < cfg.spurious; ++i) spurious_at[lo + (i + 1) * stride] = i;
    }

    frame_id_t fid = 0;
    for (unsigned a = 0; a < cfg.areas; ++a) {
        for (unsigned p = 0; p < cfg.places_per_area; ++p) {
            for (unsigned rep = 0; rep < cfg.frames_per_place; ++rep, ++fid) {
                if (const auto it = spurious_at.find(fid); it != spurious_at.end()) {
                    const unsigned place = (3 * it->second + 1) % cfg.places_per_area;
                    out.frames.push_back(render_place(cfg, pool, layouts[0][place], fid));
                    out.spurious_ids.push_back(fid);
                } else {
                    out.frames.push_back(render_place(cfg, pool, layouts[a][p], fid));
                }
            }
        }
    }
    for (unsigned p = 0; p < cfg.places_per_area; ++p) {
        for (unsigned rep = 0; rep < cfg.frames_per_place; ++rep, ++fid) {
            out.frames.push_back(render_place(cfg, pool, layouts[0][p], fid));
            for (unsigned r0 = 0; r0 < cfg.frames_per_place; ++r0)
                out.gt.pairs.emplace_back(fid, p * cfg.frames_per_place + r0);
        }
    }
    out.gt.tolerance = cfg.gt_tolerance;

    auto train_rng = sub_rng(cfg.seed, 'T');
    out.training_pool.reserve(cfg.pool_size * (cfg.training_copies + 1));
    for (const auto& d : pool) {
        out.training_pool.push_back(d);
        for (unsigned c = 0; c < cfg.training_copies; ++c)
            out.training_pool.push_back(noisy_copy(d, train_rng, cfg.noise_bits));
    }
    return out;
}

sequence_output generate_sequence(const sequence_config& cfg) {
    if (cfg.descriptor_bits % 8 != 0) throw std::invalid_argument("descriptor_bits must be a multiple of 8");
    if (cfg.n_sites < cfg.sites_per_place) throw std::invalid_argument("n_sites must be >= sites_per_place");

    sequence_output out;
    auto site_rng = sub_rng(cfg.seed, 'S');
    out.sites.reserve(cfg.n_sites);
    for (unsigned i = 0; i < cfg.n_sites; ++i) out.sites.push_back(random_descriptor(site_rng, cfg.descriptor_bits));

    out.frames.reserve(cfg.n_frames);
    std::vector<std::uint32_t> place_sites;
    unsigned current_place = static_cast<unsigned>(-1);
    for (frame_id_t t = 0; t < cfg.n_frames; ++t) {
        const unsigned place = t / cfg.frames_per_place;
        if (place != current_place) {
            auto rng = sub_rng(cfg.seed, 'Q', place);
            place_sites = sample_indices(rng, cfg.n_sites, cfg.sites_per_place);
            current_place = place;
        }
        auto rng = sub_rng(cfg.seed, 'G', t);
        frame_features f;
        f.frame_id = t;
        f.timestamp = t * 0.1;
        f.width = static_cast<int>(cfg.width);
        f.height = static_cast<int>(cfg.height);
        for (unsigned i = 0; i < cfg.features_per_frame; ++i) {
            keypoint kp;
            kp.x = 10.0 + uniform01(rng) * (cfg.width - 20.0);
            kp.y = 10.0 + uniform01(rng) * (cfg.height - 20.0);
            kp.size = 30.0;
            f.keypoints.push_back(kp);
            f.descriptors.push_back(
                noisy_copy(out.sites[place_sites[i % place_sites.size()]], rng, cfg.noise_bits));
        }
        out.frames.push_back(std::move(f));
    }
    return out;
}

}  // namespace bowg
