#include "tinyintent/inference.hpp"

namespace tinyintent {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

char lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

InferenceEngine::InferenceEngine(const LoadedModel& loaded) : InferenceEngine(to_trained_model(loaded)) {}

InferenceEngine::InferenceEngine(LoadedModel&& loaded) : InferenceEngine(to_trained_model(std::move(loaded))) {}

InferenceEngine::InferenceEngine(TrainedModel&& model)
    : params_(), word_vocab_(), char_vocab_(), label_map_(), pcfg_(), cache_(model.config) {
    params_ = std::move(model.params);
    word_vocab_ = std::move(model.word_vocab);
    char_vocab_ = std::move(model.char_vocab);
    label_map_ = std::move(model.label_map);
    pcfg_ = params_.config.pipeline();

    enc_.max_word_len = pcfg_.max_word_len;
    enc_.word_ids.assign(static_cast<std::size_t>(pcfg_.max_seq_len), Vocabulary::kPad);
    enc_.char_ids.assign(static_cast<std::size_t>(pcfg_.max_seq_len) * pcfg_.max_word_len, Vocabulary::kPad);

    // Any token longer than every vocabulary token cannot match, so copies are
    // capped; 4 bytes per char still covers max_word_len UTF-8 chars.
    std::size_t longest = 0;
    for (const std::string& tok : word_vocab_.tokens()) longest = std::max(longest, tok.size());
    token_byte_cap_ = std::max(longest, static_cast<std::size_t>(4 * pcfg_.max_word_len));
    lower_buf_.reserve(static_cast<std::size_t>(pcfg_.max_seq_len) * token_byte_cap_);
    spans_.reserve(static_cast<std::size_t>(pcfg_.max_seq_len));
}

InferenceEngine InferenceEngine::load(const std::filesystem::path& path) {
    return InferenceEngine(load_model(path));
}

void InferenceEngine::encode_into(std::string_view text, EncodedUtterance& out) {
    lower_buf_.clear();
    spans_.clear();

    std::size_t i = 0;
    while (i < text.size() && static_cast<int>(spans_.size()) < pcfg_.max_seq_len) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i == start) break;
        const std::size_t full = i - start;
        const std::size_t copy = std::min(full, token_byte_cap_);
        const std::size_t off = lower_buf_.size();
        for (std::size_t k = 0; k < copy; ++k)
            lower_buf_.push_back(pcfg_.lowercase ? lower_ascii(text[start + k]) : text[start + k]);
        spans_.push_back({static_cast<std::uint32_t>(off), static_cast<std::uint32_t>(copy),
                          static_cast<std::uint32_t>(full)});
    }
    if (spans_.empty()) throw InputError("infer: empty or whitespace-only text");

    out.max_word_len = pcfg_.max_word_len;
    out.true_length = static_cast<int>(spans_.size());
    out.word_ids.assign(static_cast<std::size_t>(pcfg_.max_seq_len), Vocabulary::kPad);
    out.char_ids.assign(static_cast<std::size_t>(pcfg_.max_seq_len) * pcfg_.max_word_len, Vocabulary::kPad);

    for (int p = 0; p < out.true_length; ++p) {
        const TokenSpan& span = spans_[static_cast<std::size_t>(p)];
        const std::string_view token(lower_buf_.data() + span.offset, span.length);
        out.word_ids[static_cast<std::size_t>(p)] =
            span.full_length > token_byte_cap_ ? Vocabulary::kUnk : word_vocab_.lookup(token);
        int* row = out.char_row(p);
        std::size_t pos = 0;
        int c = 0;
        while (pos < token.size() && c < pcfg_.max_word_len) {
            const std::size_t n = utf8_seq_len(token, pos);
            row[c++] = char_vocab_.lookup(token.substr(pos, n));
            pos += n;
        }
    }
}

void InferenceEngine::infer_into(std::string_view text, IntentPrediction& out) {
    encode_into(text, enc_);
    forward(enc_, params_, cache_);
    out.label_id = argmax(cache_.probs.data(), params_.config.num_labels);
    out.label_name.assign(label_map_.token(out.label_id));
    out.probabilities.assign(cache_.probs.begin(), cache_.probs.end());
}

IntentPrediction InferenceEngine::infer(std::string_view text) {
    IntentPrediction out;
    infer_into(text, out);
    return out;
}

}  // namespace tinyintent
