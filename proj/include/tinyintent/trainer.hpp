#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tinyintent/data_io.hpp"
#include "tinyintent/model.hpp"

namespace tinyintent {

struct TrainConfig {
    int batch_size = 16;
    int epochs = 10;
    float lr = 0.001f;
    std::uint64_t seed = 0;
    bool shuffle = true;

    void validate() const {
        if (batch_size < 1) throw InputError("train config: batch_size must be >= 1");
        if (epochs < 1) throw InputError("train config: epochs must be >= 1");
    }
};

struct EpochStats {
    float train_loss = 0.0f;
    float val_accuracy = 0.0f;
};

// Float parameter set bundled with the vocabularies it was trained with.
struct TrainedModel {
    ModelConfig config;
    Parameters<float> params;
    Vocabulary word_vocab;
    Vocabulary char_vocab;
    Vocabulary label_map;
};

struct RunResult {
    TrainedModel model;  // snapshot with the best validation accuracy
    float best_val_accuracy = -1.0f;
    float test_accuracy = 0.0f;
    std::vector<EpochStats> history;  // one entry per epoch
};

// Accuracies are fractions in [0, 1]; variance is population variance.
struct ExperimentSummary {
    std::vector<float> run_accuracies;
    float mean_accuracy = 0.0f;
    float variance = 0.0f;
};

struct ExperimentResult {
    ExperimentSummary summary;
    RunResult best;  // highest test accuracy, earliest run on ties
    int best_run = 0;
};

using TrainLogFn = std::function<void(const std::string&)>;

// One seeded training run: builds vocabularies from the train split only,
// encodes all splits, then runs epochs of shuffled mini-batches with Adam.
// Parameters are snapshotted whenever validation accuracy strictly improves;
// test accuracy is computed on the best snapshot. Deterministic given
// tcfg.seed. Vocab sizes and num_labels in mcfg are filled from the data.
RunResult train_run(const DatasetSplit& train, const DatasetSplit& valid, const DatasetSplit& test,
                    ModelConfig mcfg, const TrainConfig& tcfg, const PretrainedEmbeddings* pretrained = nullptr,
                    const TrainLogFn& log = {});

// Fraction of utterances whose predicted label equals gold (batch size 1).
// Labels unseen at training time can never match and count as errors.
float evaluate(const TrainedModel& model, const DatasetSplit& split);

// Repeats train_run with seeds base_seed .. base_seed+n_runs-1 and aggregates
// mean and population variance of the test accuracies. Runs are independent;
// up to max_threads of them execute in parallel.
ExperimentResult run_experiment(const DatasetSplit& train, const DatasetSplit& valid, const DatasetSplit& test,
                                const ModelConfig& mcfg, const TrainConfig& tcfg, int n_runs,
                                std::uint64_t base_seed, const PretrainedEmbeddings* pretrained = nullptr,
                                int max_threads = 1, const TrainLogFn& log = {});

std::pair<float, float> mean_and_population_variance(const std::vector<float>& xs);

// Sequential [start, stop) mini-batch bounds covering n items; the last batch
// may be short but is never dropped.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, int batch_size);

// Word id -> pretrained vector for every vocab token present in the table.
std::unordered_map<int, std::vector<float>> pretrained_rows_for_vocab(const PretrainedEmbeddings& emb,
                                                                      const Vocabulary& word_vocab);

}  // namespace tinyintent
