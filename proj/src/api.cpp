#include "tinyintent/api.hpp"

#include <charconv>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "tinyintent/model_file.hpp"
#include "tinyintent/quantize.hpp"

namespace tinyintent {

namespace {

int parse_int(std::string_view s, const std::string& key) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InputError("config override " + key + ": expected an integer, got '" + std::string(s) + "'");
    return v;
}

float parse_float(std::string_view s, const std::string& key) {
    float v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InputError("config override " + key + ": expected a number, got '" + std::string(s) + "'");
    return v;
}

bool parse_bool(std::string_view s, const std::string& key) {
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw InputError("config override " + key + ": expected a boolean, got '" + std::string(s) + "'");
}

std::vector<int> parse_int_list(std::string_view s, const std::string& key) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string_view::npos) comma = s.size();
        out.push_back(parse_int(s.substr(start, comma - start), key));
        start = comma + 1;
        if (comma == s.size()) break;
    }
    if (out.empty()) throw InputError("config override " + key + ": empty list");
    return out;
}

double pct(double fraction) { return 100.0 * fraction; }

}  // namespace

void apply_override(ModelConfig& mcfg, TrainConfig& tcfg, const std::string& key_value) {
    const std::size_t eq = key_value.find('=');
    if (eq == std::string::npos)
        throw InputError("config override '" + key_value + "': expected key=value");
    const std::string key = key_value.substr(0, eq);
    const std::string value = key_value.substr(eq + 1);

    if (key == "word_emb_dim")
        mcfg.word_emb_dim = parse_int(value, key);
    else if (key == "char_emb_dim")
        mcfg.char_emb_dim = parse_int(value, key);
    else if (key == "lstm_hidden")
        mcfg.lstm_hidden = parse_int(value, key);
    else if (key == "max_seq_len")
        mcfg.max_seq_len = parse_int(value, key);
    else if (key == "max_word_len")
        mcfg.max_word_len = parse_int(value, key);
    else if (key == "kernel_sizes")
        mcfg.conv_kernel_sizes = parse_int_list(value, key);
    else if (key == "filter_counts")
        mcfg.conv_filter_counts = parse_int_list(value, key);
    else if (key == "conv_activation") {
        if (value == "relu")
            mcfg.conv_activation = ConvActivation::Relu;
        else if (value == "identity")
            mcfg.conv_activation = ConvActivation::Identity;
        else
            throw InputError("config override conv_activation: expected relu or identity");
    } else if (key == "lowercase")
        mcfg.lowercase = parse_bool(value, key);
    else if (key == "epochs")
        tcfg.epochs = parse_int(value, key);
    else if (key == "batch_size")
        tcfg.batch_size = parse_int(value, key);
    else if (key == "lr")
        tcfg.lr = parse_float(value, key);
    else if (key == "shuffle")
        tcfg.shuffle = parse_bool(value, key);
    else
        throw InputError("unknown config override '" + key + "'");
}

int run_parallelism(int runs) {
    int cap = 1;
    if (const char* env = std::getenv("TINYINTENT_THREADS")) {
        try {
            cap = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw InputError("TINYINTENT_THREADS: expected an integer");
        }
    }
    return std::max(1, std::min(cap, runs));
}

const DatasetSplit& select_split(const Dataset& data, const std::string& name) {
    if (name == "train") return data.train;
    if (name == "valid") return data.valid;
    if (name == "test") return data.test;
    throw InputError("unknown split '" + name + "' (expected train, valid or test)");
}

TrainReport train_command(const TrainOptions& opts, const TrainLogFn& log) {
    if (opts.runs < 1) throw InputError("train: --runs must be >= 1");
    if (opts.out_model.empty()) throw InputError("train: --out is required");
    Dataset data = load_dataset(opts.data_dir);

    for (const DatasetSplit* split : {&data.valid, &data.test}) {
        for (const std::string& label : unseen_labels(data.train, *split))
            if (log) log("warning: label '" + label + "' never occurs in the training split");
    }

    PretrainedEmbeddings embeddings;
    const PretrainedEmbeddings* embeddings_ptr = nullptr;
    double coverage = -1.0;
    if (!opts.embeddings.empty()) {
        Vocabulary vocab = build_word_vocab(data.train, opts.model.pipeline());
        embeddings = load_embeddings(opts.embeddings, opts.model.word_emb_dim, &vocab);
        embeddings_ptr = &embeddings;
        coverage = embedding_coverage(embeddings, vocab);
        if (log)
            log("embeddings: " + std::to_string(embeddings.vectors.size()) + " rows kept, vocabulary coverage " +
                std::to_string(pct(coverage)) + "%");
    }

    ExperimentResult result = run_experiment(data.train, data.valid, data.test, opts.model, opts.train, opts.runs,
                                             opts.seed, embeddings_ptr, run_parallelism(opts.runs), log);

    save_model(result.best.model, opts.out_model);

    TrainReport report;
    report.summary = std::move(result.summary);
    report.best_run = result.best_run;
    report.best_test_accuracy = result.best.test_accuracy;
    report.embedding_coverage = coverage;
    report.model_path = opts.out_model;
    report.summary_path =
        opts.summary_path.empty() ? std::filesystem::path(opts.out_model.string() + ".summary.jsonl") : opts.summary_path;

    std::ofstream out(report.summary_path, std::ios::trunc);
    if (!out) throw IoError("cannot write summary file " + report.summary_path.string());
    for (std::size_t r = 0; r < report.summary.run_accuracies.size(); ++r) {
        nlohmann::json line = {
            {"type", "run"},
            {"run", r},
            {"seed", opts.seed + r},
            {"test_accuracy_pct", pct(report.summary.run_accuracies[r])},
        };
        out << line.dump() << "\n";
    }
    nlohmann::json tail = {
        {"type", "summary"},
        {"n_runs", opts.runs},
        {"mean_accuracy_pct", pct(report.summary.mean_accuracy)},
        {"variance_pct", 1e4 * static_cast<double>(report.summary.variance)},
        {"best_run", report.best_run},
        {"model_file", opts.out_model.string()},
        {"embedding_coverage_pct", coverage < 0 ? -1.0 : pct(coverage)},
    };
    out << tail.dump() << "\n";
    if (!out) throw IoError("short write to summary file " + report.summary_path.string());
    return report;
}

double evaluate_command(const std::filesystem::path& model_path, const std::filesystem::path& data_dir,
                        const std::string& split) {
    TrainedModel model = to_trained_model(load_model(model_path));
    Dataset data = load_dataset(data_dir);
    return pct(evaluate(model, select_split(data, split)));
}

QuantizeReport quantize_command(const std::filesystem::path& in_model, const std::filesystem::path& out_model) {
    TrainedModel model = to_trained_model(load_model(in_model));
    save_model(quantize_model(model), out_model);
    return QuantizeReport{std::filesystem::file_size(in_model), std::filesystem::file_size(out_model)};
}

}  // namespace tinyintent
