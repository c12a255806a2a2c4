#pragma once

#include <filesystem>
#include <string_view>

#include "tinyintent/model.hpp"
#include "tinyintent/model_file.hpp"

namespace tinyintent {

// Deployment-side engine. Weights are dequantized to float once at load and
// every forward-pass buffer is preallocated from the config, so infer_into
// performs no heap allocation after a warm-up call.
//
// Concurrency contract: one call at a time per engine; copy the engine for
// concurrent callers (all state is value-owned).
class InferenceEngine {
public:
    explicit InferenceEngine(const LoadedModel& loaded);
    // Consumes the loaded records so peak load memory stays near one float
    // per weight.
    explicit InferenceEngine(LoadedModel&& loaded);

    static InferenceEngine load(const std::filesystem::path& path);

    // Full pipeline: tokenize/lowercase/encode -> forward -> label.
    // Reuses the capacity of `out`.
    void infer_into(std::string_view text, IntentPrediction& out);

    IntentPrediction infer(std::string_view text);

    // The encode step alone, exposed so tests can pin it against the
    // reference pipeline implementation.
    void encode_into(std::string_view text, EncodedUtterance& out);

    const ModelConfig& config() const { return params_.config; }
    const Parameters<float>& parameters() const { return params_; }
    const Vocabulary& word_vocab() const { return word_vocab_; }
    const Vocabulary& char_vocab() const { return char_vocab_; }
    const Vocabulary& label_map() const { return label_map_; }

private:
    explicit InferenceEngine(TrainedModel&& model);

    Parameters<float> params_;
    Vocabulary word_vocab_;
    Vocabulary char_vocab_;
    Vocabulary label_map_;
    PipelineConfig pcfg_;
    ForwardCache<float> cache_;
    EncodedUtterance enc_;

    struct TokenSpan {
        std::uint32_t offset;
        std::uint32_t length;       // bytes copied into the lowercase buffer
        std::uint32_t full_length;  // bytes in the original token
    };
    std::string lower_buf_;
    std::vector<TokenSpan> spans_;
    std::size_t token_byte_cap_ = 0;
};

}  // namespace tinyintent
