#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "tinyintent/errors.hpp"
#include "tinyintent/pipeline.hpp"

namespace tinyintent {

enum class ConvActivation : int { Identity = 0, Relu = 1 };

// Architecture hyperparameters. Defaults are the training setup used for the
// benchmark datasets; vocab sizes and num_labels are filled in from data.
struct ModelConfig {
    int word_emb_dim = 50;
    int char_emb_dim = 15;
    std::vector<int> conv_kernel_sizes = {3, 4, 5};
    std::vector<int> conv_filter_counts = {10, 20, 30};
    int lstm_hidden = 128;
    int max_seq_len = 25;
    int max_word_len = 20;
    int num_labels = 0;
    int word_vocab_size = 0;
    int char_vocab_size = 0;
    ConvActivation conv_activation = ConvActivation::Relu;
    bool lowercase = true;

    int num_conv_branches() const { return static_cast<int>(conv_kernel_sizes.size()); }

    // Width of the concatenated max-pooled conv outputs.
    int char_feature_width() const {
        return std::accumulate(conv_filter_counts.begin(), conv_filter_counts.end(), 0);
    }

    // Width of one LSTM input: word embedding plus char features.
    int lstm_input_width() const { return word_emb_dim + char_feature_width(); }

    int conv_out_len(int branch) const { return max_word_len - conv_kernel_sizes[static_cast<std::size_t>(branch)] + 1; }

    PipelineConfig pipeline() const { return PipelineConfig{max_seq_len, max_word_len, lowercase}; }

    void validate() const {
        if (word_emb_dim < 1 || char_emb_dim < 1) throw ValidationError("config: embedding dims must be positive");
        if (conv_kernel_sizes.empty() || conv_kernel_sizes.size() != conv_filter_counts.size())
            throw ValidationError("config: kernel sizes and filter counts must be non-empty and parallel");
        for (std::size_t i = 0; i < conv_kernel_sizes.size(); ++i) {
            if (conv_kernel_sizes[i] < 1 || conv_filter_counts[i] < 1)
                throw ValidationError("config: conv kernel sizes and filter counts must be positive");
            if (conv_kernel_sizes[i] > max_word_len)
                throw ValidationError("config: conv kernel size " + std::to_string(conv_kernel_sizes[i]) +
                                      " exceeds max_word_len " + std::to_string(max_word_len));
        }
        if (lstm_hidden < 1) throw ValidationError("config: lstm_hidden must be positive");
        if (max_seq_len < 1 || max_word_len < 1) throw ValidationError("config: sequence bounds must be positive");
        if (num_labels < 1) throw ValidationError("config: num_labels must be positive");
        if (word_vocab_size < 2 || char_vocab_size < 2)
            throw ValidationError("config: vocab sizes must include PAD and UNK");
    }
};

// Closed-form trainable parameter count:
//   Vw*We + Vc*Ce + sum_i(Ki*Ce*Fi + Fi) + 4*(H*(D+H) + H) + (NL*H + NL)
// Kept independent of the tensor enumeration so the two can cross-check.
inline long long expected_parameter_count(const ModelConfig& cfg) {
    long long total = 0;
    total += static_cast<long long>(cfg.word_vocab_size) * cfg.word_emb_dim;
    total += static_cast<long long>(cfg.char_vocab_size) * cfg.char_emb_dim;
    for (std::size_t i = 0; i < cfg.conv_kernel_sizes.size(); ++i)
        total += static_cast<long long>(cfg.conv_kernel_sizes[i]) * cfg.char_emb_dim * cfg.conv_filter_counts[i] +
                 cfg.conv_filter_counts[i];
    const long long d = cfg.lstm_input_width();
    const long long h = cfg.lstm_hidden;
    total += 4 * (h * (d + h) + h);
    total += static_cast<long long>(cfg.num_labels) * h + cfg.num_labels;
    return total;
}

}  // namespace tinyintent
