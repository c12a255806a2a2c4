#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdio>

#include "tinyintent/api.hpp"
#include "tinyintent/model_file.hpp"
#include "tinyintent/quantize.hpp"

namespace py = pybind11;

namespace {

py::dict summary_to_dict(const tinyintent::TrainReport& report) {
    py::dict d;
    py::list accs;
    for (float a : report.summary.run_accuracies) accs.append(100.0 * static_cast<double>(a));
    d["run_accuracies_pct"] = accs;
    d["mean_accuracy_pct"] = 100.0 * static_cast<double>(report.summary.mean_accuracy);
    d["variance_pct"] = 1e4 * static_cast<double>(report.summary.variance);
    d["best_run"] = report.best_run;
    d["best_test_accuracy_pct"] = 100.0 * static_cast<double>(report.best_test_accuracy);
    d["embedding_coverage"] = report.embedding_coverage;
    d["model_path"] = report.model_path.string();
    d["summary_path"] = report.summary_path.string();
    return d;
}

py::dict prediction_to_dict(const tinyintent::IntentPrediction& p) {
    py::dict d;
    d["label"] = p.label_name;
    d["label_id"] = p.label_id;
    d["probabilities"] = p.probabilities;
    return d;
}

}  // namespace

PYBIND11_MODULE(_tinyintent, m) {
    m.doc() = "Intent classification with char-CNN enriched word representations: "
              "training, int8 quantization and on-device style inference.";

    m.def(
        "train",
        [](const std::filesystem::path& data_dir, const std::filesystem::path& out_model, int runs,
           std::uint64_t seed, const std::filesystem::path& embeddings,
           const std::vector<std::string>& config, bool verbose) {
            tinyintent::TrainOptions opts;
            opts.data_dir = data_dir;
            opts.out_model = out_model;
            opts.embeddings = embeddings;
            opts.runs = runs;
            opts.seed = seed;
            for (const std::string& kv : config) tinyintent::apply_override(opts.model, opts.train, kv);
            tinyintent::TrainLogFn log;
            if (verbose) log = [](const std::string& line) { std::printf("%s\n", line.c_str()); };
            tinyintent::TrainReport report;
            {
                py::gil_scoped_release release;
                report = tinyintent::train_command(opts, log);
            }
            return summary_to_dict(report);
        },
        py::arg("data_dir"), py::arg("out_model"), py::arg("runs") = 1, py::arg("seed") = 0,
        py::arg("embeddings") = std::filesystem::path(), py::arg("config") = std::vector<std::string>(),
        py::arg("verbose") = false,
        "Train on <data_dir>/{train,valid,test} and write the best float model.");

    m.def(
        "evaluate",
        [](const std::filesystem::path& model, const std::filesystem::path& data_dir, const std::string& split) {
            py::gil_scoped_release release;
            return tinyintent::evaluate_command(model, data_dir, split);
        },
        py::arg("model"), py::arg("data_dir"), py::arg("split") = "test",
        "Accuracy in percent on the named split.");

    m.def(
        "quantize",
        [](const std::filesystem::path& in_model, const std::filesystem::path& out_model) {
            tinyintent::QuantizeReport r;
            {
                py::gil_scoped_release release;
                r = tinyintent::quantize_command(in_model, out_model);
            }
            return py::make_tuple(r.input_bytes, r.output_bytes);
        },
        py::arg("in_model"), py::arg("out_model"),
        "Post-training int8 quantization; returns (input_bytes, output_bytes).");

    py::class_<tinyintent::InferenceEngine>(m, "Engine", "Loaded model ready for single-utterance inference.")
        .def(py::init([](const std::filesystem::path& path) { return tinyintent::InferenceEngine::load(path); }),
             py::arg("path"))
        .def(
            "infer",
            [](tinyintent::InferenceEngine& self, const std::string& text) {
                return prediction_to_dict(self.infer(text));
            },
            py::arg("text"), "Classify one utterance; returns {label, label_id, probabilities}.")
        .def_property_readonly("labels", [](const tinyintent::InferenceEngine& self) {
            return self.label_map().tokens();
        });
}
