#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tinyintent {

struct BenchReport {
    long n_inferences = 0;
    double mean_latency_us = 0.0;
    double p50_us = 0.0;
    double p95_us = 0.0;
    double max_us = 0.0;
    std::size_t peak_alloc_bytes = 0;   // inference path: engine + scratch
    long long peak_rss_bytes = -1;      // whole process high-water mark, informational
    std::uintmax_t model_file_bytes = 0;
    int warmup = 0;
    int repeat = 1;
};

// Monotonic nanosecond clock; injectable so tests can pin the timing
// arithmetic and the fact that each sample wraps exactly one inference.
using NowFn = std::function<std::uint64_t()>;

// Times the complete per-utterance pipeline (tokenization, encoding, model
// execution, label determination) over `texts`, single-threaded, batch
// size 1. Warm-up iterations are excluded from both timing and the
// allocation window baseline; the allocation window covers engine load
// through the last timed inference.
BenchReport run_bench(const std::filesystem::path& model_path, const std::vector<std::string>& texts,
                      int warmup = 50, int repeat = 1, NowFn now = {});

// Peak process RSS in bytes from the OS, or -1 when unavailable.
long long peak_rss_bytes();

}  // namespace tinyintent
