#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bowg/bench.hpp"
#include "bowg/config.hpp"
#include "bowg/features.hpp"

namespace py = pybind11;

namespace {

/// Owns a database + detector pair so python sees one object.
class pipeline {
public:
    pipeline(std::shared_ptr<bowg::vocabulary> vocab, const std::map<std::string, std::string>& config)
        : detector_(bowg::make_detector(std::move(vocab), resolve(config))) {}

    bowg::loop_result detect(const bowg::frame_features& frame) { return detector_.detect(frame); }

    std::vector<bowg::loop_result> run(const std::vector<bowg::frame_features>& frames) {
        return bowg::replay(detector_, frames);
    }

    std::size_t size() const { return detector_.db().size(); }
    void save_database(const std::filesystem::path& path) const { detector_.db().save(path); }

private:
    static bowg::run_settings resolve(const std::map<std::string, std::string>& config) {
        bowg::run_settings settings;
        for (const auto& [key, value] : config) bowg::apply_setting(settings, key, value);
        return settings;
    }

    bowg::loop_detector detector_;
};

std::int64_t signed_id(bowg::frame_id_t id) {
    return id == bowg::invalid_frame ? -1 : static_cast<std::int64_t>(id);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bag-of-word-groups loop closure detection";

    py::class_<bowg::keypoint>(m, "Keypoint")
        .def(py::init<>())
        .def_readwrite("x", &bowg::keypoint::x)
        .def_readwrite("y", &bowg::keypoint::y)
        .def_readwrite("size", &bowg::keypoint::size)
        .def_readwrite("octave", &bowg::keypoint::octave);

    py::class_<bowg::frame_features>(m, "FrameFeatures")
        .def(py::init<>())
        .def_readwrite("frame_id", &bowg::frame_features::frame_id)
        .def_readwrite("timestamp", &bowg::frame_features::timestamp)
        .def_readwrite("width", &bowg::frame_features::width)
        .def_readwrite("height", &bowg::frame_features::height)
        .def_property_readonly("keypoints", [](const bowg::frame_features& f) { return f.keypoints; })
        .def("__len__", &bowg::frame_features::size);

    m.def("load_features", &bowg::load_features, py::arg("path"));
    m.def(
        "save_features",
        [](const std::filesystem::path& path, const std::vector<bowg::frame_features>& frames,
           unsigned bits) { bowg::save_features(path, frames, bits); },
        py::arg("path"), py::arg("frames"), py::arg("descriptor_bits") = 256);

    py::class_<bowg::vocabulary, std::shared_ptr<bowg::vocabulary>>(m, "Vocabulary")
        .def_static(
            "train",
            [](const std::vector<bowg::frame_features>& frames, unsigned k, unsigned levels,
               std::uint64_t seed) {
                std::vector<bowg::binary_descriptor> pool;
                for (const auto& f : frames)
                    pool.insert(pool.end(), f.descriptors.begin(), f.descriptors.end());
                bowg::vocab_config config;
                config.k = k;
                config.levels = levels;
                config.seed = seed;
                return std::make_shared<bowg::vocabulary>(bowg::vocabulary::train(pool, config));
            },
            py::arg("frames"), py::arg("k") = 10, py::arg("levels") = 6, py::arg("seed") = 0)
        .def_static("load",
                    [](const std::filesystem::path& path) {
                        return std::make_shared<bowg::vocabulary>(bowg::vocabulary::load(path));
                    })
        .def("save", [](const bowg::vocabulary& v, const std::filesystem::path& path) { v.save(path); })
        .def_property_readonly("word_count", &bowg::vocabulary::word_count)
        .def_property_readonly("descriptor_bits", &bowg::vocabulary::descriptor_bits);

    py::class_<bowg::loop_result>(m, "LoopResult")
        .def_readonly("frame_id", &bowg::loop_result::frame_id)
        .def_property_readonly("status",
                               [](const bowg::loop_result& r) {
                                   std::string s{bowg::status_name(r.status)};
                                   if (r.featureless) s += "(featureless)";
                                   return s;
                               })
        .def_property_readonly("matched_id",
                               [](const bowg::loop_result& r) { return signed_id(r.matched_id); })
        .def_readonly("eta_w", &bowg::loop_result::eta_w)
        .def_readonly("eta_g", &bowg::loop_result::eta_g)
        .def_readonly("eta_d", &bowg::loop_result::eta_d)
        .def_readonly("eta_sim", &bowg::loop_result::eta_sim)
        .def_property_readonly("island",
                               [](const bowg::loop_result& r) {
                                   return std::make_pair(signed_id(r.island_range.lo),
                                                         signed_id(r.island_range.hi));
                               })
        .def_readonly("inliers", &bowg::loop_result::inliers);

    py::class_<pipeline>(m, "Pipeline")
        .def(py::init<std::shared_ptr<bowg::vocabulary>, const std::map<std::string, std::string>&>(),
             py::arg("vocabulary"), py::arg("config") = std::map<std::string, std::string>{})
        .def("detect", &pipeline::detect, py::arg("frame"))
        .def("run", &pipeline::run, py::arg("frames"))
        .def("save_database", &pipeline::save_database, py::arg("path"))
        .def("__len__", &pipeline::size);

    m.def(
        "database_frame_count",
        [](const std::filesystem::path& path) { return bowg::database::load(path).size(); },
        py::arg("path"), "Load a snapshot and return how many frames it stores.");

    py::class_<bowg::ground_truth>(m, "GroundTruth")
        .def(py::init<>())
        .def_readwrite("tolerance", &bowg::ground_truth::tolerance)
        .def_readwrite("pairs", &bowg::ground_truth::pairs);

    m.def("load_ground_truth", &bowg::load_ground_truth, py::arg("path"));
    m.def("save_ground_truth", &bowg::save_ground_truth, py::arg("gt"), py::arg("path"));

    py::class_<bowg::eval_report>(m, "EvalReport")
        .def_readonly("detections", &bowg::eval_report::detections)
        .def_readonly("tp", &bowg::eval_report::tp)
        .def_readonly("fp", &bowg::eval_report::fp)
        .def_readonly("fn", &bowg::eval_report::fn)
        .def_readonly("precision", &bowg::eval_report::precision)
        .def_readonly("recall", &bowg::eval_report::recall)
        .def_readonly("f1", &bowg::eval_report::f1)
        .def_readonly("auc", &bowg::eval_report::auc)
        .def_readonly("recall_at_full_precision", &bowg::eval_report::recall_at_full_precision);

    m.def(
        "evaluate",
        [](const std::vector<bowg::loop_result>& results, const bowg::ground_truth& gt,
           std::optional<unsigned> tolerance) {
            return bowg::evaluate(results, gt, tolerance.value_or(gt.tolerance));
        },
        py::arg("results"), py::arg("gt"), py::arg("tolerance") = std::nullopt);

    py::class_<bowg::synth_config>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("areas", &bowg::synth_config::areas)
        .def_readwrite("places_per_area", &bowg::synth_config::places_per_area)
        .def_readwrite("frames_per_place", &bowg::synth_config::frames_per_place)
        .def_readwrite("pool_size", &bowg::synth_config::pool_size)
        .def_readwrite("words_per_place", &bowg::synth_config::words_per_place)
        .def_readwrite("noise_bits", &bowg::synth_config::noise_bits)
        .def_readwrite("spurious", &bowg::synth_config::spurious)
        .def_readwrite("seed", &bowg::synth_config::seed);

    py::class_<bowg::synth_output>(m, "SynthOutput")
        .def_readonly("frames", &bowg::synth_output::frames)
        .def_readonly("gt", &bowg::synth_output::gt)
        .def_readonly("spurious_ids", &bowg::synth_output::spurious_ids)
        .def_readonly("revisit_start", &bowg::synth_output::revisit_start);

    m.def("generate_aliasing", &bowg::generate_aliasing, py::arg("config"));
}
