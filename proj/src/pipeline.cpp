#include "tinyintent/pipeline.hpp"

#include <cctype>

namespace tinyintent {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

}  // namespace

std::size_t utf8_seq_len(std::string_view s, std::size_t i) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t n = 1;
    if ((b & 0xe0) == 0xc0)
        n = 2;
    else if ((b & 0xf0) == 0xe0)
        n = 3;
    else if ((b & 0xf8) == 0xf0)
        n = 4;
    if (i + n > s.size()) return 1;
    for (std::size_t k = 1; k < n; ++k)
        if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return 1;
    return n;
}

std::vector<std::string_view> tokenize(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

std::vector<std::string_view> utf8_chars(std::string_view token) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < token.size()) {
        std::size_t n = utf8_seq_len(token, i);
        out.push_back(token.substr(i, n));
        i += n;
    }
    return out;
}

std::string lowercased(std::string_view token) {
    std::string out(token);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

Vocabulary build_word_vocab(const DatasetSplit& train, const PipelineConfig& cfg) {
    if (train.empty()) throw DataError("build_word_vocab: empty training split");
    Vocabulary v = Vocabulary::with_specials();
    for (const Utterance& u : train.items)
        for (std::string_view tok : tokenize(u.text)) v.add(cfg.lowercase ? lowercased(tok) : std::string(tok));
    return v;
}

Vocabulary build_char_vocab(const DatasetSplit& train, const PipelineConfig& cfg) {
    if (train.empty()) throw DataError("build_char_vocab: empty training split");
    Vocabulary v = Vocabulary::with_specials();
    for (const Utterance& u : train.items) {
        for (std::string_view tok : tokenize(u.text)) {
            std::string lower = cfg.lowercase ? lowercased(tok) : std::string(tok);
            for (std::string_view ch : utf8_chars(lower)) v.add(ch);
        }
    }
    return v;
}

Vocabulary build_label_map(const DatasetSplit& train) {
    if (train.empty()) throw DataError("build_label_map: empty training split");
    Vocabulary v = Vocabulary::plain();
    for (const Utterance& u : train.items) v.add(u.intent);
    return v;
}

EncodedUtterance encode_utterance(std::string_view text, const Vocabulary& word_vocab,
                                  const Vocabulary& char_vocab, const PipelineConfig& cfg) {
    std::vector<std::string_view> tokens = tokenize(text);
    if (tokens.empty()) throw InputError("encode_utterance: empty or whitespace-only text");
    if (static_cast<int>(tokens.size()) > cfg.max_seq_len) tokens.resize(static_cast<std::size_t>(cfg.max_seq_len));

    EncodedUtterance enc;
    enc.max_word_len = cfg.max_word_len;
    enc.true_length = static_cast<int>(tokens.size());
    enc.word_ids.assign(static_cast<std::size_t>(cfg.max_seq_len), Vocabulary::kPad);
    enc.char_ids.assign(static_cast<std::size_t>(cfg.max_seq_len) * cfg.max_word_len, Vocabulary::kPad);

    for (int p = 0; p < enc.true_length; ++p) {
        std::string tok = cfg.lowercase ? lowercased(tokens[static_cast<std::size_t>(p)])
                                        : std::string(tokens[static_cast<std::size_t>(p)]);
        enc.word_ids[static_cast<std::size_t>(p)] = word_vocab.lookup(tok);
        int* row = enc.char_row(p);
        int c = 0;
        for (std::string_view ch : utf8_chars(tok)) {
            if (c >= cfg.max_word_len) break;
            row[c++] = char_vocab.lookup(ch);
        }
    }
    return enc;
}

}  // namespace tinyintent
