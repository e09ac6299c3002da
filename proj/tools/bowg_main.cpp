#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "bowg/bench.hpp"
#include "bowg/config.hpp"
#include "bowg/detector.hpp"
#include "bowg/features.hpp"

namespace {

/// --config plus one flag per config key; flags override the file.
struct config_cli {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_options(CLI::App* cmd, config_cli& cc) {
    cmd->add_option("--config", cc.config_path, "flat key=value config file");
    for (const auto key : bowg::config_keys()) {
        cmd->add_option_function<std::string>(
            fmt::format("--{}", key),
            [&cc, key](const std::string& v) { cc.overrides.emplace_back(std::string(key), v); },
            fmt::format("config key {}", key));
    }
}

bowg::run_settings resolve_settings(const config_cli& cc) {
    bowg::run_settings settings;
    if (!cc.config_path.empty()) settings = bowg::load_config(cc.config_path);
    for (const auto& [key, value] : cc.overrides) bowg::apply_setting(settings, key, value);
    return settings;
}

unsigned descriptor_bits_of(std::span<const bowg::frame_features> frames) {
    for (const auto& f : frames)
        if (f.descriptor_bits() > 0) return f.descriptor_bits();
    return 256;
}

std::vector<bowg::frame_features> frames_from_image_list(const std::string& list_path,
                                                         const bowg::detector_config& config) {
    std::ifstream in(list_path);
    if (!in) throw bowg::io_error(fmt::format("cannot open {}", list_path));
    std::vector<bowg::frame_features> frames;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto image = bowg::load_pgm(line);
        auto frame = bowg::detect(image, config);
        frame.frame_id = static_cast<bowg::frame_id_t>(frames.size());
        frame.timestamp = static_cast<double>(frames.size());
        frames.push_back(std::move(frame));
    }
    return frames;
}

void print_eval(const bowg::eval_report& report) {
    fmt::print("detections = {}\n", report.detections);
    fmt::print("tp = {}\nfp = {}\nfn = {}\ngt_queries = {}\n", report.tp, report.fp, report.fn,
               report.gt_queries);
    fmt::print("precision = {}{}\n", report.precision,
               report.no_detections ? "  # no detections, 1.0 by convention" : "");
    fmt::print("recall = {}\n", report.recall);
    fmt::print("f1 = {}\n", report.f1);
    fmt::print("recall_at_full_precision = {}\n", report.recall_at_full_precision);
    fmt::print("pr_auc = {}\n", report.auc);
    fmt::print("micros_per_query: median = {} mean = {} std = {} max = {}\n", report.total_micros.median,
               report.total_micros.mean, report.total_micros.stddev, report.total_micros.max);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bag-of-word-groups loop-closure toolkit"};
    app.require_subcommand(1);

    // vocab train
    auto* vocab_cmd = app.add_subcommand("vocab", "vocabulary operations");
    vocab_cmd->require_subcommand(1);
    auto* train_cmd = vocab_cmd->add_subcommand("train", "train a hierarchical vocabulary");
    std::string train_features, train_out;
    bowg::vocab_config vc;
    bool per_image_idf = false;
    train_cmd->add_option("--features", train_features, "input features file")->required();
    train_cmd->add_option("--out", train_out, "output vocabulary file")->required();
    train_cmd->add_option("--k", vc.k, "branching factor");
    train_cmd->add_option("--levels", vc.levels, "tree depth");
    train_cmd->add_option("--seed", vc.seed, "clustering seed");
    train_cmd->add_flag("--per-image-idf", per_image_idf, "derive idf from per-frame document frequency");
    train_cmd->callback([&] {
        const auto frames = bowg::load_features(train_features);
        std::vector<bowg::binary_descriptor> pool;
        std::vector<std::size_t> image_sizes;
        for (const auto& f : frames) {
            pool.insert(pool.end(), f.descriptors.begin(), f.descriptors.end());
            image_sizes.push_back(f.descriptors.size());
        }
        if (!per_image_idf) image_sizes.clear();
        const auto vocab = bowg::vocabulary::train(pool, vc, image_sizes);
        vocab.save(train_out);
        fmt::print("trained {} words ({} nodes) from {} descriptors\n", vocab.word_count(),
                   vocab.node_count(), pool.size());
    });

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "detect features in PGM images listed in a file");
    std::string extract_list, extract_out;
    config_cli extract_cc;
    extract_cmd->add_option("--list", extract_list, "text file with one PGM path per line")->required();
    extract_cmd->add_option("--out", extract_out, "output features file")->required();
    add_config_options(extract_cmd, extract_cc);
    extract_cmd->callback([&] {
        const auto settings = resolve_settings(extract_cc);
        const auto frames = frames_from_image_list(extract_list, settings.detector);
        bowg::save_features(extract_out, frames, descriptor_bits_of(frames));
        fmt::print("extracted {} frames\n", frames.size());
    });

    // run
    auto* run_cmd = app.add_subcommand("run", "replay a features file through loop detection");
    std::string run_features, run_vocab, run_out, run_timing, run_db_out;
    config_cli run_cc;
    run_cmd->add_option("--features", run_features, "input features file")->required();
    run_cmd->add_option("--vocab", run_vocab, "vocabulary file")->required();
    run_cmd->add_option("--out", run_out, "loop-results CSV")->required();
    run_cmd->add_option("--timing", run_timing, "per-stage timing CSV");
    run_cmd->add_option("--db-out", run_db_out, "database snapshot to write after the run");
    add_config_options(run_cmd, run_cc);
    run_cmd->callback([&] {
        const auto settings = resolve_settings(run_cc);
        fmt::print("# resolved config\n{}", bowg::format_config(settings));
        const auto frames = bowg::load_features(run_features);
        auto vocab = std::make_shared<const bowg::vocabulary>(bowg::vocabulary::load(run_vocab));
        auto detector = bowg::make_detector(std::move(vocab), settings);
        const auto results = bowg::replay(detector, frames);
        bowg::write_results_csv(std::filesystem::path(run_out), results);
        if (!run_timing.empty()) bowg::write_timing_csv(std::filesystem::path(run_timing), results);
        if (!run_db_out.empty()) detector.db().save(run_db_out);
        unsigned accepted = 0;
        for (const auto& r : results)
            if (r.status == bowg::loop_status::accepted) ++accepted;
        fmt::print("{} frames, {} accepted loops\n", results.size(), accepted);
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score a results CSV against ground truth");
    std::string eval_results, eval_gt, eval_gt_matrix, eval_curve;
    int eval_tolerance = -1;
    eval_cmd->add_option("--results", eval_results, "loop-results CSV")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth pair file");
    eval_cmd->add_option("--gt-matrix", eval_gt_matrix, "square boolean-matrix ground truth");
    eval_cmd->add_option("--tolerance", eval_tolerance, "frame tolerance (default from the GT file)");
    eval_cmd->add_option("--curve", eval_curve, "write the alpha sweep as CSV");
    eval_cmd->callback([&] {
        if (eval_gt.empty() == eval_gt_matrix.empty())
            throw CLI::ValidationError("eval", "exactly one of --gt / --gt-matrix is required");
        const auto gt = eval_gt.empty() ? bowg::ground_truth_from_matrix(eval_gt_matrix)
                                        : bowg::load_ground_truth(eval_gt);
        const auto results = bowg::read_results_csv(eval_results);
        const unsigned tolerance = eval_tolerance < 0 ? gt.tolerance : static_cast<unsigned>(eval_tolerance);
        const auto report = bowg::evaluate(results, gt, tolerance);
        print_eval(report);
        if (!eval_curve.empty()) {
            std::ofstream out(eval_curve);
            if (!out) throw bowg::io_error(fmt::format("cannot open {} for writing", eval_curve));
            out << "alpha,tp,fp,precision,recall\n";
            for (const auto& pt : report.curve)
                out << fmt::format("{},{},{},{},{}\n", pt.alpha, pt.tp, pt.fp, pt.precision, pt.recall);
        }
    });

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate the perceptual-aliasing scenario");
    std::string synth_features, synth_gt;
    bowg::synth_config sc;
    synth_cmd->add_option("--out-features", synth_features, "output features file")->required();
    synth_cmd->add_option("--out-gt", synth_gt, "output ground-truth file")->required();
    synth_cmd->add_option("--seed", sc.seed, "scenario seed");
    synth_cmd->add_option("--areas", sc.areas, "number of areas");
    synth_cmd->add_option("--places", sc.places_per_area, "places per area");
    synth_cmd->add_option("--frames-per-place", sc.frames_per_place, "frames per place visit");
    synth_cmd->add_option("--pool-size", sc.pool_size, "shared descriptor pool size");
    synth_cmd->add_option("--words-per-place", sc.words_per_place, "words per place (multiple of 18)");
    synth_cmd->add_option("--noise-bits", sc.noise_bits, "descriptor bits flipped per occurrence");
    synth_cmd->add_option("--dropped-words", sc.dropped_words, "words occluded per frame");
    synth_cmd->add_option("--jitter", sc.jitter_px, "keypoint jitter in pixels");
    synth_cmd->add_option("--spurious", sc.spurious, "injected look-alike frames");
    synth_cmd->callback([&] {
        const auto out = bowg::generate_aliasing(sc);
        bowg::save_features(synth_features, out.frames, sc.descriptor_bits);
        bowg::save_ground_truth(out.gt, synth_gt);
        fmt::print("{} frames ({} spurious), {} gt pairs, revisit starts at frame {}\n", out.frames.size(),
                   out.spurious_ids.size(), out.gt.pairs.size(), out.revisit_start);
    });

    // db
    auto* db_cmd = app.add_subcommand("db", "database snapshots");
    db_cmd->require_subcommand(1);
    auto* db_save = db_cmd->add_subcommand("save", "build a database from a features file and snapshot it");
    std::string dbs_features, dbs_vocab, dbs_out;
    config_cli dbs_cc;
    db_save->add_option("--features", dbs_features, "input features file")->required();
    db_save->add_option("--vocab", dbs_vocab, "vocabulary file")->required();
    db_save->add_option("--out", dbs_out, "snapshot path")->required();
    add_config_options(db_save, dbs_cc);
    db_save->callback([&] {
        const auto settings = resolve_settings(dbs_cc);
        fmt::print("# resolved config\n{}", bowg::format_config(settings));
        const auto frames = bowg::load_features(dbs_features);
        auto vocab = std::make_shared<const bowg::vocabulary>(bowg::vocabulary::load(dbs_vocab));
        bowg::database db(std::move(vocab), settings.database);
        for (const auto& f : frames) db.add_frame(f);
        db.save(dbs_out);
        fmt::print("stored {} frames, group table total {}\n", db.size(), db.group_table().total());
    });
    auto* db_load = db_cmd->add_subcommand("load", "load a snapshot and print its summary");
    std::string dbl_in;
    db_load->add_option("--in", dbl_in, "snapshot path")->required();
    db_load->callback([&] {
        const auto db = bowg::database::load(dbl_in);
        fmt::print("frames = {}\n", db.size());
        fmt::print("vocab_words = {}\n", db.vocab().word_count());
        fmt::print("group_table_total = {}\n", db.group_table().total());
        fmt::print("group_table_entries = {}\n", db.group_table().entries().size());
        fmt::print("di_level = {}\nm_batches = {}\n", db.config().di_level, db.config().m_batches);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
