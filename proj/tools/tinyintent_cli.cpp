// Command-line surface: train, eval, infer, quantize, bench.
// Exit codes: 0 success, 1 runtime failure, 2 usage/data error.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tinyintent/api.hpp"
#include "tinyintent/bench.hpp"
#include "tinyintent/errors.hpp"

namespace {

using tinyintent::BenchReport;

void print_prediction(const tinyintent::IntentPrediction& p, const tinyintent::Vocabulary& labels) {
    std::printf("label: %s (id %d)\n", p.label_name.c_str(), p.label_id);
    std::printf("probabilities:\n");
    for (int i = 0; i < static_cast<int>(p.probabilities.size()); ++i)
        std::printf("  %-24s %.6f\n", labels.token(i).c_str(), static_cast<double>(p.probabilities[i]));
}

nlohmann::json bench_json(const BenchReport& r, const std::string& model, const std::string& split) {
    return nlohmann::json{
        {"type", "bench"},
        {"model_file", model},
        {"split", split},
        {"n_inferences", r.n_inferences},
        {"warmup", r.warmup},
        {"repeat", r.repeat},
        {"mean_latency_us", r.mean_latency_us},
        {"p50_us", r.p50_us},
        {"p95_us", r.p95_us},
        {"max_us", r.max_us},
        {"peak_alloc_bytes", r.peak_alloc_bytes},
        {"peak_rss_bytes", r.peak_rss_bytes},
        {"model_file_bytes", r.model_file_bytes},
    };
}

int run(int argc, char** argv) {
    CLI::App app{"On-device intent classification: char-CNN enriched word representations + LSTM"};
    app.require_subcommand(1);

    // --- train ---
    auto* train = app.add_subcommand("train", "Train a model (optionally several seeded runs)");
    std::string train_data, train_out, train_embeddings, train_summary;
    int train_runs = 1;
    std::uint64_t train_seed = 0;
    bool quiet = false;
    std::vector<std::string> overrides;
    train->add_option("--data", train_data, "Dataset root with train/ valid/ test/")->required();
    train->add_option("--out", train_out, "Output float model path")->required();
    train->add_option("--embeddings", train_embeddings, "Pretrained word embedding text file");
    train->add_option("--runs", train_runs, "Number of seeded runs (seed, seed+1, ...)");
    train->add_option("--seed", train_seed, "Base seed");
    train->add_option("--summary", train_summary, "Summary JSONL path (default: <out>.summary.jsonl)");
    train->add_option("--config", overrides, "Hyperparameter overrides, key=value (repeatable)");
    train->add_flag("--quiet", quiet, "Suppress per-epoch progress");

    // --- eval ---
    auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset split");
    std::string eval_model, eval_data, eval_split = "test";
    eval->add_option("--model", eval_model, "Model file (float or quantized)")->required();
    eval->add_option("--data", eval_data, "Dataset root")->required();
    eval->add_option("--split", eval_split, "train, valid or test (default test)");

    // --- infer ---
    auto* infer = app.add_subcommand("infer", "Classify a single utterance");
    std::string infer_model, infer_text;
    infer->add_option("--model", infer_model, "Model file")->required();
    infer->add_option("--text", infer_text, "Utterance text")->required();

    // --- quantize ---
    auto* quantize = app.add_subcommand("quantize", "Post-training int8 quantization");
    std::string q_in, q_out;
    quantize->add_option("--in", q_in, "Input float model")->required();
    quantize->add_option("--out", q_out, "Output quantized model")->required();

    // --- bench ---
    auto* bench = app.add_subcommand("bench", "Latency/memory benchmark over a dataset split");
    std::string bench_model, bench_data, bench_split = "test", bench_json_path;
    int bench_warmup = 50, bench_repeat = 1;
    bench->add_option("--model", bench_model, "Model file")->required();
    bench->add_option("--data", bench_data, "Dataset root")->required();
    bench->add_option("--split", bench_split, "train, valid or test (default test)");
    bench->add_option("--warmup", bench_warmup, "Warm-up inferences excluded from timing");
    bench->add_option("--repeat", bench_repeat, "Timed passes over the split");
    bench->add_option("--json", bench_json_path, "Also write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (train->parsed()) {
        tinyintent::TrainOptions opts;
        opts.data_dir = train_data;
        opts.out_model = train_out;
        opts.embeddings = train_embeddings;
        opts.summary_path = train_summary;
        opts.runs = train_runs;
        opts.seed = train_seed;
        for (const std::string& kv : overrides) tinyintent::apply_override(opts.model, opts.train, kv);
        tinyintent::TrainLogFn log;
        if (!quiet) log = [](const std::string& line) { std::printf("%s\n", line.c_str()); };

        tinyintent::TrainReport report = tinyintent::train_command(opts, log);

        std::printf("\n%4s %6s %10s\n", "run", "seed", "test_acc%");
        for (std::size_t r = 0; r < report.summary.run_accuracies.size(); ++r)
            std::printf("%4zu %6" PRIu64 " %10.2f\n", r, opts.seed + r,
                        100.0 * static_cast<double>(report.summary.run_accuracies[r]));
        std::printf("mean %.2f%%  variance %.4f  over %d run(s)\n",
                    100.0 * static_cast<double>(report.summary.mean_accuracy),
                    1e4 * static_cast<double>(report.summary.variance), opts.runs);
        std::printf("model written to %s (%ju bytes)\n", report.model_path.string().c_str(),
                    static_cast<std::uintmax_t>(std::filesystem::file_size(report.model_path)));
        std::printf("summary written to %s\n", report.summary_path.string().c_str());
        return 0;
    }

    if (eval->parsed()) {
        const double pct = tinyintent::evaluate_command(eval_model, eval_data, eval_split);
        std::printf("accuracy %.2f%%\n", pct);
        return 0;
    }

    if (infer->parsed()) {
        tinyintent::InferenceEngine engine = tinyintent::InferenceEngine::load(infer_model);
        tinyintent::IntentPrediction p = engine.infer(infer_text);
        print_prediction(p, engine.label_map());
        return 0;
    }

    if (quantize->parsed()) {
        tinyintent::QuantizeReport r = tinyintent::quantize_command(q_in, q_out);
        std::printf("input  %ju bytes\n", static_cast<std::uintmax_t>(r.input_bytes));
        std::printf("output %ju bytes (%.1f%% of input)\n", static_cast<std::uintmax_t>(r.output_bytes),
                    100.0 * static_cast<double>(r.output_bytes) / static_cast<double>(r.input_bytes));
        return 0;
    }

    if (bench->parsed()) {
        tinyintent::Dataset data = tinyintent::load_dataset(bench_data);
        const tinyintent::DatasetSplit& split = tinyintent::select_split(data, bench_split);
        std::vector<std::string> texts;
        texts.reserve(split.size());
        for (const tinyintent::Utterance& u : split.items) texts.push_back(u.text);

        BenchReport r = tinyintent::run_bench(bench_model, texts, bench_warmup, bench_repeat);

        std::printf("model file    %ju bytes (%.1f KiB)\n", static_cast<std::uintmax_t>(r.model_file_bytes),
                    static_cast<double>(r.model_file_bytes) / 1024.0);
        std::printf("inferences    %ld (warmup %d, repeat %d)\n", r.n_inferences, r.warmup, r.repeat);
        std::printf("mean latency  %.3f ms\n", r.mean_latency_us / 1000.0);
        std::printf("p50/p95/max   %.3f / %.3f / %.3f ms\n", r.p50_us / 1000.0, r.p95_us / 1000.0,
                    r.max_us / 1000.0);
        std::printf("peak alloc    %zu bytes (%.2f MiB, inference path)\n", r.peak_alloc_bytes,
                    static_cast<double>(r.peak_alloc_bytes) / (1024.0 * 1024.0));
        if (r.peak_rss_bytes >= 0)
            std::printf("peak RSS      %lld bytes (whole process, informational)\n", r.peak_rss_bytes);

        nlohmann::json j = bench_json(r, bench_model, bench_split);
        std::printf("%s\n", j.dump().c_str());
        if (!bench_json_path.empty()) {
            std::ofstream out(bench_json_path, std::ios::trunc);
            if (!out) throw tinyintent::IoError("cannot write " + bench_json_path);
            out << j.dump() << "\n";
        }
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const tinyintent::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
