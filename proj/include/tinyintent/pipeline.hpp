#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tinyintent/data_io.hpp"
#include "tinyintent/vocab.hpp"

namespace tinyintent {

struct PipelineConfig {
    int max_seq_len = 25;
    int max_word_len = 20;
    bool lowercase = true;
};

// Fixed-shape id form of one utterance. word_ids has max_seq_len entries,
// char_ids is max_seq_len rows of max_word_len, row-major. Positions at or
// beyond true_length are PAD in both arrays.
struct EncodedUtterance {
    std::vector<int> word_ids;
    std::vector<int> char_ids;
    int true_length = 0;
    int max_word_len = 0;

    const int* char_row(int pos) const { return char_ids.data() + static_cast<std::size_t>(pos) * max_word_len; }
    int* char_row(int pos) { return char_ids.data() + static_cast<std::size_t>(pos) * max_word_len; }
};

// Whitespace-delimited token spans of `text`, in order.
std::vector<std::string_view> tokenize(std::string_view text);

// Splits a token into UTF-8 character spans. Invalid or truncated sequences
// fall back to one span per byte.
std::vector<std::string_view> utf8_chars(std::string_view token);

// Length in bytes of the UTF-8 sequence starting at s[i], clamped to what is
// actually there; 1 for invalid lead bytes. Allocation-free building block
// for the iterating callers.
std::size_t utf8_seq_len(std::string_view s, std::size_t i);

// ASCII lowercasing; multi-byte UTF-8 passes through untouched.
std::string lowercased(std::string_view token);

// One id per distinct (lowercased per cfg) training token, plus PAD/UNK,
// in first-occurrence order.
Vocabulary build_word_vocab(const DatasetSplit& train, const PipelineConfig& cfg = {});

// One id per distinct character observed in training tokens, plus PAD/UNK.
Vocabulary build_char_vocab(const DatasetSplit& train, const PipelineConfig& cfg = {});

// Dense label ids in first-occurrence order; no reserved entries.
Vocabulary build_label_map(const DatasetSplit& train);

// Raw text -> fixed-shape ids. Sequences longer than max_seq_len are
// truncated from the tail; each word's characters are truncated/padded to
// max_word_len. OOV words map to UNK while their char ids still encode the
// actual characters. Throws InputError on empty/whitespace-only text.
EncodedUtterance encode_utterance(std::string_view text, const Vocabulary& word_vocab,
                                  const Vocabulary& char_vocab, const PipelineConfig& cfg);

}  // namespace tinyintent
