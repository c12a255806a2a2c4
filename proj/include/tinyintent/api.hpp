#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tinyintent/inference.hpp"
#include "tinyintent/trainer.hpp"

// High-level operations shared by the CLI and the python bindings.

namespace tinyintent {

struct TrainOptions {
    std::filesystem::path data_dir;      // root containing train/ valid/ test/
    std::filesystem::path embeddings;    // optional pretrained word vectors
    std::filesystem::path out_model;     // best float model is written here
    std::filesystem::path summary_path;  // default: out_model + ".summary.jsonl"
    int runs = 1;
    std::uint64_t seed = 0;
    ModelConfig model;
    TrainConfig train;
};

struct TrainReport {
    ExperimentSummary summary;
    int best_run = 0;
    float best_test_accuracy = 0.0f;
    double embedding_coverage = -1.0;  // fraction; -1 when trained without embeddings
    std::filesystem::path model_path;
    std::filesystem::path summary_path;
};

// Loads data, runs the (possibly multi-run) experiment, writes the best
// float model and a JSON-lines summary.
TrainReport train_command(const TrainOptions& opts, const TrainLogFn& log = {});

// Accuracy in percent on the named split ("train", "valid" or "test").
double evaluate_command(const std::filesystem::path& model_path, const std::filesystem::path& data_dir,
                        const std::string& split);

struct QuantizeReport {
    std::uintmax_t input_bytes = 0;
    std::uintmax_t output_bytes = 0;
};

QuantizeReport quantize_command(const std::filesystem::path& in_model, const std::filesystem::path& out_model);

// Applies one "key=value" hyperparameter override; throws InputError on
// unknown keys or malformed values.
void apply_override(ModelConfig& mcfg, TrainConfig& tcfg, const std::string& key_value);

// Run parallelism: min(runs, TINYINTENT_THREADS). Single-threaded unless the
// environment raises the cap.
int run_parallelism(int runs);

const DatasetSplit& select_split(const Dataset& data, const std::string& name);

}  // namespace tinyintent
