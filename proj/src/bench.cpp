#include "tinyintent/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include "tinyintent/alloc_tracker.hpp"
#include "tinyintent/errors.hpp"
#include "tinyintent/inference.hpp"

namespace tinyintent {

namespace {

std::uint64_t steady_now_ns() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
            .count());
}

double percentile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    idx = idx == 0 ? 0 : idx - 1;
    return sorted[std::min(idx, n - 1)];
}

}  // namespace

long long peak_rss_bytes() {
    std::ifstream in("/proc/self/status");
    if (!in) return -1;
    std::string key;
    while (in >> key) {
        if (key == "VmHWM:") {
            long long kb = 0;
            if (in >> kb) return kb * 1024;
            return -1;
        }
        in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    }
    return -1;
}

BenchReport run_bench(const std::filesystem::path& model_path, const std::vector<std::string>& texts, int warmup,
                      int repeat, NowFn now) {
    if (texts.empty()) throw DataError("bench: no utterances to time");
    if (repeat < 1) throw InputError("bench: repeat must be >= 1");
    if (warmup < 0) throw InputError("bench: warmup must be >= 0");
    if (!now) now = steady_now_ns;

    if (!std::filesystem::exists(model_path)) throw IoError("cannot open model file " + model_path.string());

    BenchReport report;
    report.warmup = warmup;
    report.repeat = repeat;
    report.n_inferences = static_cast<long>(texts.size()) * repeat;
    report.model_file_bytes = std::filesystem::file_size(model_path);

    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(report.n_inferences));

    // Allocation window starts here so it covers the engine itself.
    alloc_tracker::reset_peak();
    const alloc_tracker::Stats before = alloc_tracker::stats();

    InferenceEngine engine = InferenceEngine::load(model_path);
    IntentPrediction prediction;
    for (int i = 0; i < warmup; ++i) engine.infer_into(texts[static_cast<std::size_t>(i) % texts.size()], prediction);

    for (int r = 0; r < repeat; ++r) {
        for (const std::string& text : texts) {
            const std::uint64_t t0 = now();
            engine.infer_into(text, prediction);
            const std::uint64_t t1 = now();
            if (t1 < t0) throw BenchError("bench: monotonic clock went backwards");
            samples.push_back(static_cast<double>(t1 - t0) / 1000.0);
        }
    }

    const alloc_tracker::Stats after = alloc_tracker::stats();
    report.peak_alloc_bytes = after.peak_bytes > before.live_bytes ? after.peak_bytes - before.live_bytes : 0;
    report.peak_rss_bytes = peak_rss_bytes();

    double sum = 0.0;
    for (double s : samples) sum += s;
    report.mean_latency_us = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    report.p50_us = percentile(samples, 0.50);
    report.p95_us = percentile(samples, 0.95);
    report.max_us = samples.back();
    return report;
}

}  // namespace tinyintent
