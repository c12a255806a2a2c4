#include "tinyintent/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <thread>

#include "tinyintent/pipeline.hpp"
#include "tinyintent/rng.hpp"

namespace tinyintent {

namespace {

struct EncodedExample {
    EncodedUtterance enc;
    int label;  // -1 when the intent was never seen in training
};

std::vector<EncodedExample> encode_split(const DatasetSplit& split, const Vocabulary& word_vocab,
                                         const Vocabulary& char_vocab, const Vocabulary& label_map,
                                         const PipelineConfig& pcfg) {
    std::vector<EncodedExample> out;
    out.reserve(split.size());
    for (const Utterance& u : split.items)
        out.push_back({encode_utterance(u.text, word_vocab, char_vocab, pcfg), label_map.lookup(u.intent)});
    return out;
}

float evaluate_encoded(const Parameters<float>& params, const std::vector<EncodedExample>& examples,
                       ForwardCache<float>& cache) {
    if (examples.empty()) throw DataError("evaluate: empty split");
    long correct = 0;
    for (const EncodedExample& ex : examples) {
        forward(ex.enc, params, cache);
        if (argmax(cache.probs.data(), params.config.num_labels) == ex.label) ++correct;
    }
    return static_cast<float>(static_cast<double>(correct) / static_cast<double>(examples.size()));
}

std::string format_line(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, int batch_size) {
    if (batch_size < 1) throw InputError("batch_ranges: batch_size must be >= 1");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size))
        out.emplace_back(start, std::min(n, start + static_cast<std::size_t>(batch_size)));
    return out;
}

std::unordered_map<int, std::vector<float>> pretrained_rows_for_vocab(const PretrainedEmbeddings& emb,
                                                                      const Vocabulary& word_vocab) {
    std::unordered_map<int, std::vector<float>> rows;
    for (int id = 2; id < word_vocab.size(); ++id) {
        auto it = emb.vectors.find(word_vocab.token(id));
        if (it != emb.vectors.end()) rows.emplace(id, it->second);
    }
    return rows;
}

RunResult train_run(const DatasetSplit& train, const DatasetSplit& valid, const DatasetSplit& test,
                    ModelConfig mcfg, const TrainConfig& tcfg, const PretrainedEmbeddings* pretrained,
                    const TrainLogFn& log) {
    if (train.empty()) throw DataError("train_run: empty training split");
    if (valid.empty()) throw DataError("train_run: empty validation split");
    if (test.empty()) throw DataError("train_run: empty test split");
    tcfg.validate();

    const PipelineConfig pcfg = mcfg.pipeline();
    Vocabulary word_vocab = build_word_vocab(train, pcfg);
    Vocabulary char_vocab = build_char_vocab(train, pcfg);
    Vocabulary label_map = build_label_map(train);
    mcfg.word_vocab_size = word_vocab.size();
    mcfg.char_vocab_size = char_vocab.size();
    mcfg.num_labels = label_map.size();
    mcfg.validate();

    std::vector<EncodedExample> train_enc = encode_split(train, word_vocab, char_vocab, label_map, pcfg);
    std::vector<EncodedExample> valid_enc = encode_split(valid, word_vocab, char_vocab, label_map, pcfg);
    std::vector<EncodedExample> test_enc = encode_split(test, word_vocab, char_vocab, label_map, pcfg);

    Parameters<float> params;
    if (pretrained) {
        auto rows = pretrained_rows_for_vocab(*pretrained, word_vocab);
        params = init_parameters<float>(mcfg, tcfg.seed, &rows);
    } else {
        params = init_parameters<float>(mcfg, tcfg.seed);
    }

    AdamState adam;
    adam.lr = tcfg.lr;
    ForwardCache<float> cache(mcfg);
    std::vector<Tensor<float>*> tensors = params.all_tensors();

    RunResult result;
    const std::size_t n = train_enc.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        if (tcfg.shuffle) {
            // Reseeded per epoch from the run seed for reproducibility.
            Rng rng(tcfg.seed + static_cast<std::uint64_t>(epoch));
            rng.shuffle(order);
        }
        double loss_sum = 0.0;
        EpochStats stats;
        try {
            for (const auto& [start, stop] : batch_ranges(n, tcfg.batch_size)) {
                const float scale = 1.0f / static_cast<float>(stop - start);
                double batch_loss = 0.0;
                for (std::size_t i = start; i < stop; ++i) {
                    const EncodedExample& ex = train_enc[order[i]];
                    forward(ex.enc, params, cache);
                    batch_loss += backward(ex.enc, ex.label, params, cache, scale);
                }
                if (!std::isfinite(batch_loss))
                    throw TrainingDivergedError("train_run: non-finite loss at epoch " + std::to_string(epoch + 1));
                loss_sum += batch_loss;
                ++adam.step_count;
                for (Tensor<float>* t : tensors) adam_step(*t, adam);
            }
            stats.train_loss = static_cast<float>(loss_sum / static_cast<double>(n));
            stats.val_accuracy = evaluate_encoded(params, valid_enc, cache);
        } catch (const NumericError& e) {
            // Non-finite activations mean the optimizer blew up.
            throw TrainingDivergedError("train_run: diverged at epoch " + std::to_string(epoch + 1) + " (" +
                                        e.what() + ")");
        }
        result.history.push_back(stats);
        if (log)
            log(format_line("epoch %d/%d train_loss %.6f val_acc %.2f", epoch + 1, tcfg.epochs,
                            static_cast<double>(stats.train_loss), 100.0 * stats.val_accuracy));
        // Strict improvement keeps the earliest best snapshot on ties.
        if (stats.val_accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = stats.val_accuracy;
            result.model.params = params.values_snapshot();
        }
    }

    result.model.config = mcfg;
    result.model.word_vocab = std::move(word_vocab);
    result.model.char_vocab = std::move(char_vocab);
    result.model.label_map = std::move(label_map);
    result.test_accuracy = evaluate_encoded(result.model.params, test_enc, cache);
    return result;
}

float evaluate(const TrainedModel& model, const DatasetSplit& split) {
    std::vector<EncodedExample> enc =
        encode_split(split, model.word_vocab, model.char_vocab, model.label_map, model.config.pipeline());
    ForwardCache<float> cache(model.config);
    return evaluate_encoded(model.params, enc, cache);
}

std::pair<float, float> mean_and_population_variance(const std::vector<float>& xs) {
    if (xs.empty()) return {0.0f, 0.0f};
    double sum = 0.0;
    for (float x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (float x : xs) sq += (x - mean) * (x - mean);
    return {static_cast<float>(mean), static_cast<float>(sq / static_cast<double>(xs.size()))};
}

ExperimentResult run_experiment(const DatasetSplit& train, const DatasetSplit& valid, const DatasetSplit& test,
                                const ModelConfig& mcfg, const TrainConfig& tcfg, int n_runs,
                                std::uint64_t base_seed, const PretrainedEmbeddings* pretrained, int max_threads,
                                const TrainLogFn& log) {
    if (n_runs < 1) throw InputError("run_experiment: n_runs must be >= 1");
    std::vector<RunResult> results(static_cast<std::size_t>(n_runs));
    std::mutex log_mutex;
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= n_runs) return;
            TrainConfig run_cfg = tcfg;
            run_cfg.seed = base_seed + static_cast<std::uint64_t>(r);
            TrainLogFn run_log;
            if (log)
                run_log = [&log, &log_mutex, r](const std::string& line) {
                    std::lock_guard<std::mutex> guard(log_mutex);
                    log("run " + std::to_string(r) + " " + line);
                };
            results[static_cast<std::size_t>(r)] = train_run(train, valid, test, mcfg, run_cfg, pretrained, run_log);
        }
    };

    const int threads = std::max(1, std::min(max_threads, n_runs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    ExperimentResult out;
    out.summary.run_accuracies.reserve(static_cast<std::size_t>(n_runs));
    for (const RunResult& r : results) out.summary.run_accuracies.push_back(r.test_accuracy);
    auto [mean, variance] = mean_and_population_variance(out.summary.run_accuracies);
    out.summary.mean_accuracy = mean;
    out.summary.variance = variance;
    out.best_run = 0;
    for (int r = 1; r < n_runs; ++r)
        if (results[static_cast<std::size_t>(r)].test_accuracy > results[static_cast<std::size_t>(out.best_run)].test_accuracy)
            out.best_run = r;
    out.best = std::move(results[static_cast<std::size_t>(out.best_run)]);
    return out;
}

}  // namespace tinyintent
