#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "testutil.hpp"
#include "tinyintent/model.hpp"
#include "tinyintent/pipeline.hpp"

using namespace tinyintent;

namespace {

EncodedUtterance utterance_from_ids(const ModelConfig& cfg, const std::vector<int>& words,
                                    const std::vector<std::vector<int>>& chars) {
    EncodedUtterance utt;
    utt.max_word_len = cfg.max_word_len;
    utt.true_length = static_cast<int>(words.size());
    utt.word_ids.assign(static_cast<std::size_t>(cfg.max_seq_len), Vocabulary::kPad);
    utt.char_ids.assign(static_cast<std::size_t>(cfg.max_seq_len) * cfg.max_word_len, Vocabulary::kPad);
    for (std::size_t p = 0; p < words.size(); ++p) {
        utt.word_ids[p] = words[p];
        for (std::size_t c = 0; c < chars[p].size(); ++c) utt.char_row(static_cast<int>(p))[c] = chars[p][c];
    }
    return utt;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-30);
}

}  // namespace

TEST_CASE("char feature width is the sum of filter counts") {
    SUBCASE("illustration config: (3,5,7) windows with (4,2,3) filters -> width 9") {
        ModelConfig cfg;
        cfg.char_emb_dim = 5;
        cfg.conv_kernel_sizes = {3, 5, 7};
        cfg.conv_filter_counts = {4, 2, 3};
        cfg.max_word_len = 7;
        cfg.num_labels = 2;
        cfg.word_vocab_size = 4;
        cfg.char_vocab_size = 6;
        Parameters<float> p = init_parameters<float>(cfg, 1);
        std::vector<int> ids(static_cast<std::size_t>(cfg.max_word_len), 2);
        CHECK(char_features(ids.data(), p).size() == 9);
        CHECK(cfg.char_feature_width() == 9);
    }
    SUBCASE("default config -> width 60 and lstm input 110") {
        ModelConfig cfg;
        cfg.num_labels = 5;
        cfg.word_vocab_size = 10;
        cfg.char_vocab_size = 10;
        CHECK(cfg.char_feature_width() == 60);
        CHECK(cfg.lstm_input_width() == 110);
    }
}

TEST_CASE("words identical after truncation produce identical char features") {
    ModelConfig cfg = testutil::tiny_config();
    Parameters<float> p = init_parameters<float>(cfg, 3);
    // Same ids -> same features, regardless of what the longer word once was.
    std::vector<int> ids1 = {2, 3, 4, 5, 2, 3};
    std::vector<int> ids2 = ids1;
    auto f1 = char_features(ids1.data(), p);
    auto f2 = char_features(ids2.data(), p);
    CHECK(std::memcmp(f1.data(), f2.data(), f1.size() * sizeof(float)) == 0);
}

TEST_CASE("word_representation concatenates word embedding first") {
    ModelConfig cfg = testutil::tiny_config();
    Parameters<float> p = init_parameters<float>(cfg, 5);
    std::vector<int> char_ids(static_cast<std::size_t>(cfg.max_word_len), Vocabulary::kPad);
    char_ids[0] = 2;

    auto repr = word_representation(3, char_ids.data(), p);
    REQUIRE(static_cast<int>(repr.size()) == cfg.lstm_input_width());
    for (int j = 0; j < cfg.word_emb_dim; ++j)
        CHECK(repr[static_cast<std::size_t>(j)] ==
              p.word_emb.values[static_cast<std::size_t>(3) * cfg.word_emb_dim + j]);
    auto feat = char_features(char_ids.data(), p);
    for (std::size_t j = 0; j < feat.size(); ++j)
        CHECK(repr[static_cast<std::size_t>(cfg.word_emb_dim) + j] == feat[j]);

    // Two words sharing all chars differ only in the word-embedding part.
    auto repr2 = word_representation(4, char_ids.data(), p);
    for (std::size_t j = static_cast<std::size_t>(cfg.word_emb_dim); j < repr.size(); ++j)
        CHECK(repr[j] == repr2[j]);

    // A PAD word is the PAD embedding row next to all-PAD char features.
    std::vector<int> pad_chars(static_cast<std::size_t>(cfg.max_word_len), Vocabulary::kPad);
    auto pad_repr = word_representation(Vocabulary::kPad, pad_chars.data(), p);
    for (int j = 0; j < cfg.word_emb_dim; ++j)
        CHECK(pad_repr[static_cast<std::size_t>(j)] == p.word_emb.values[static_cast<std::size_t>(j)]);
    auto pad_feat = char_features(pad_chars.data(), p);
    for (std::size_t j = 0; j < pad_feat.size(); ++j)
        CHECK(pad_repr[static_cast<std::size_t>(cfg.word_emb_dim) + j] == pad_feat[j]);
}

TEST_CASE("encode_sentence: zero LSTM weights give a zero sentence vector") {
    ModelConfig cfg = testutil::tiny_config();
    Parameters<float> p = init_parameters<float>(cfg, 7);
    std::fill(p.lstm_w.values.begin(), p.lstm_w.values.end(), 0.0f);
    std::fill(p.lstm_b.values.begin(), p.lstm_b.values.end(), 0.0f);
    Rng rng(7);
    EncodedUtterance utt = testutil::random_utterance(rng, cfg);
    for (float v : encode_sentence(utt, p)) CHECK(v == 0.0f);
}

TEST_CASE("encode_sentence: single token equals one LSTM step from zero state") {
    ModelConfig cfg = testutil::tiny_config();
    Rng rng(11);
    Parameters<float> p = init_parameters<float>(cfg, 11);
    testutil::randomize_parameters(p, rng);

    EncodedUtterance utt = utterance_from_ids(cfg, {4}, {{2, 3}});
    auto sentence = encode_sentence(utt, p);

    auto repr = word_representation(4, utt.char_row(0), p);
    const int d = cfg.lstm_input_width(), h = cfg.lstm_hidden;
    std::vector<float> xh(static_cast<std::size_t>(d + h), 0.0f);
    std::copy(repr.begin(), repr.end(), xh.begin());
    std::vector<float> gates(static_cast<std::size_t>(4 * h)), c(static_cast<std::size_t>(h)),
        tc(static_cast<std::size_t>(h)), hv(static_cast<std::size_t>(h)), c0(static_cast<std::size_t>(h), 0.0f);
    lstm_cell(xh.data(), d, h, p.lstm_w.values.data(), p.lstm_b.values.data(), c0.data(), gates.data(), c.data(),
              tc.data(), hv.data());
    for (int i = 0; i < h; ++i) CHECK(sentence[static_cast<std::size_t>(i)] == hv[static_cast<std::size_t>(i)]);
}

TEST_CASE("encode_sentence: empty utterance is an input error") {
    ModelConfig cfg = testutil::tiny_config();
    Parameters<float> p = init_parameters<float>(cfg, 1);
    EncodedUtterance utt = utterance_from_ids(cfg, {2}, {{2}});
    utt.true_length = 0;
    CHECK_THROWS_AS(encode_sentence(utt, p), InputError);
}

TEST_CASE("forward: zero head gives uniform probabilities and label 0") {
    ModelConfig cfg = testutil::tiny_config();
    Rng rng(13);
    Parameters<float> p = init_parameters<float>(cfg, 13);
    testutil::randomize_parameters(p, rng);
    std::fill(p.dense_w.values.begin(), p.dense_w.values.end(), 0.0f);
    std::fill(p.dense_b.values.begin(), p.dense_b.values.end(), 0.0f);

    EncodedUtterance utt = testutil::random_utterance(rng, cfg);
    auto probs = forward_probs(utt, p);
    for (float v : probs) CHECK(v == doctest::Approx(1.0 / cfg.num_labels).epsilon(1e-6));
    CHECK(argmax(probs.data(), cfg.num_labels) == 0);  // lowest-index tie-break
}

TEST_CASE("forward: probabilities sum to one; constant bias shift changes nothing") {
    ModelConfig cfg = testutil::tiny_config();
    Rng rng(17);
    for (int iter = 0; iter < 10; ++iter) {
        Parameters<float> p = init_parameters<float>(cfg, static_cast<std::uint64_t>(iter));
        testutil::randomize_parameters(p, rng);
        EncodedUtterance utt = testutil::random_utterance(rng, cfg);
        auto probs = forward_probs(utt, p);
        double sum = 0;
        for (float v : probs) sum += v;
        CHECK(std::abs(sum - 1.0) < 1e-6);

        const int before = argmax(probs.data(), cfg.num_labels);
        for (float& b : p.dense_b.values) b += 3.25f;
        auto shifted = forward_probs(utt, p);
        CHECK(argmax(shifted.data(), cfg.num_labels) == before);
        for (int i = 0; i < cfg.num_labels; ++i)
            CHECK(shifted[static_cast<std::size_t>(i)] ==
                  doctest::Approx(probs[static_cast<std::size_t>(i)]).epsilon(1e-4));
    }
}

TEST_CASE("padding invariance: predictions are bit-identical under extra PAD") {
    ModelConfig cfg = testutil::tiny_config();
    Rng rng(23);
    Parameters<float> p = init_parameters<float>(cfg, 23);
    testutil::randomize_parameters(p, rng);
    ForwardCache<float> cache(cfg);

    for (int iter = 0; iter < 1000; ++iter) {
        EncodedUtterance utt = testutil::random_utterance(rng, cfg);
        forward(utt, p, cache);
        std::vector<float> base = cache.probs;

        // Stretch the arrays with more PAD beyond true_length.
        EncodedUtterance longer = utt;
        const int extra = 1 + static_cast<int>(rng.next_below(10));
        longer.word_ids.resize(longer.word_ids.size() + static_cast<std::size_t>(extra), Vocabulary::kPad);
        longer.char_ids.resize(longer.char_ids.size() + static_cast<std::size_t>(extra) * cfg.max_word_len,
                               Vocabulary::kPad);
        forward(longer, p, cache);
        CHECK(std::memcmp(base.data(), cache.probs.data(), base.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("shared-prefix words are closer than character-disjoint words") {
    // petrify / petrifies share the stem; sandbox shares no characters.
    DatasetSplit seed_corpus;
    seed_corpus.items.push_back({"petrify petrifies sandbox", "x"});
    Vocabulary chars = build_char_vocab(seed_corpus);
    PipelineConfig pcfg;

    ModelConfig cfg;
    cfg.num_labels = 2;
    cfg.word_vocab_size = 4;
    cfg.char_vocab_size = chars.size();

    Vocabulary words = Vocabulary::with_specials();
    auto ids_for = [&](const std::string& w) {
        EncodedUtterance enc = encode_utterance(w, words, chars, pcfg);
        return std::vector<int>(enc.char_row(0), enc.char_row(0) + cfg.max_word_len);
    };
    auto petrify = ids_for("petrify");
    auto petrifies = ids_for("petrifies");
    auto sandbox = ids_for("sandbox");

    int shared_wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Parameters<float> p = init_parameters<float>(cfg, seed);
        auto f0 = char_features(petrify.data(), p);
        auto f1 = char_features(petrifies.data(), p);
        auto f2 = char_features(sandbox.data(), p);
        if (cosine(f0, f1) > cosine(f0, f2)) ++shared_wins;
    }
    CHECK(shared_wins >= 90);
}

TEST_CASE("parameter count: formula matches enumeration; ATIS-shaped total") {
    SUBCASE("tiny config") {
        ModelConfig cfg = testutil::tiny_config();
        Parameters<float> p = init_parameters<float>(cfg, 1);
        CHECK(p.parameter_count() == expected_parameter_count(cfg));
    }
    SUBCASE("ATIS-shaped config gives 166287 trainable parameters") {
        ModelConfig cfg;
        cfg.word_vocab_size = 724;
        cfg.char_vocab_size = 70;
        cfg.num_labels = 21;
        CHECK(expected_parameter_count(cfg) == 166287);
        Parameters<float> p = init_parameters<float>(cfg, 1);
        CHECK(p.parameter_count() == 166287);
    }
    SUBCASE("random configs: formula equals enumeration") {
        Rng rng(31);
        for (int iter = 0; iter < 10; ++iter) {
            ModelConfig cfg;
            cfg.word_emb_dim = 1 + static_cast<int>(rng.next_below(20));
            cfg.char_emb_dim = 1 + static_cast<int>(rng.next_below(8));
            cfg.conv_kernel_sizes = {1 + static_cast<int>(rng.next_below(3)), 4};
            cfg.conv_filter_counts = {1 + static_cast<int>(rng.next_below(6)),
                                      1 + static_cast<int>(rng.next_below(6))};
            cfg.lstm_hidden = 1 + static_cast<int>(rng.next_below(32));
            cfg.max_word_len = 8;
            cfg.num_labels = 2 + static_cast<int>(rng.next_below(8));
            cfg.word_vocab_size = 2 + static_cast<int>(rng.next_below(50));
            cfg.char_vocab_size = 2 + static_cast<int>(rng.next_below(20));
            Parameters<float> p = init_parameters<float>(cfg, iter);
            CHECK(p.parameter_count() == expected_parameter_count(cfg));
        }
    }
}

TEST_CASE("init_parameters: determinism and pretrained row copies") {
    ModelConfig cfg = testutil::tiny_config();
    SUBCASE("same seed, same bits") {
        Parameters<float> a = init_parameters<float>(cfg, 42);
        Parameters<float> b = init_parameters<float>(cfg, 42);
        auto ta = a.all_tensors();
        auto tb = b.all_tensors();
        for (std::size_t i = 0; i < ta.size(); ++i)
            CHECK(std::memcmp(ta[i]->values.data(), tb[i]->values.data(), ta[i]->size() * sizeof(float)) == 0);
        Parameters<float> c = init_parameters<float>(cfg, 43);
        CHECK(std::memcmp(a.word_emb.values.data(), c.word_emb.values.data(),
                          a.word_emb.size() * sizeof(float)) != 0);
    }
    SUBCASE("pretrained rows are copied verbatim, others untouched") {
        std::unordered_map<int, std::vector<float>> rows;
        rows[3] = {0.5f, -0.5f, 0.25f, -0.25f};
        Parameters<float> with = init_parameters<float>(cfg, 42, &rows);
        Parameters<float> without = init_parameters<float>(cfg, 42);
        for (int j = 0; j < cfg.word_emb_dim; ++j) {
            CHECK(with.word_emb.values[static_cast<std::size_t>(3 * cfg.word_emb_dim + j)] ==
                  rows[3][static_cast<std::size_t>(j)]);
            // A row not in the table is identical with or without pretraining.
            CHECK(with.word_emb.values[static_cast<std::size_t>(5 * cfg.word_emb_dim + j)] ==
                  without.word_emb.values[static_cast<std::size_t>(5 * cfg.word_emb_dim + j)]);
        }
    }
    SUBCASE("forget-gate bias starts at one") {
        Parameters<float> p = init_parameters<float>(cfg, 42);
        const int h = cfg.lstm_hidden;
        for (int j = 0; j < h; ++j) {
            CHECK(p.lstm_b.values[static_cast<std::size_t>(j)] == 0.0f);          // input gate
            CHECK(p.lstm_b.values[static_cast<std::size_t>(h + j)] == 1.0f);      // forget gate
            CHECK(p.lstm_b.values[static_cast<std::size_t>(2 * h + j)] == 0.0f);  // candidate
            CHECK(p.lstm_b.values[static_cast<std::size_t>(3 * h + j)] == 0.0f);  // output gate
        }
    }
}

TEST_CASE("forward rejects malformed utterances") {
    ModelConfig cfg = testutil::tiny_config();
    Parameters<float> p = init_parameters<float>(cfg, 1);
    ForwardCache<float> cache(cfg);

    EncodedUtterance utt = utterance_from_ids(cfg, {2}, {{2}});
    utt.word_ids[0] = cfg.word_vocab_size;  // out of range
    CHECK_THROWS_AS(forward(utt, p, cache), IndexError);

    EncodedUtterance utt2 = utterance_from_ids(cfg, {2}, {{2}});
    utt2.char_row(0)[0] = -1;
    CHECK_THROWS_AS(forward(utt2, p, cache), IndexError);
}

TEST_CASE("deterministic forward: identical inputs give identical bits") {
    ModelConfig cfg = testutil::tiny_config();
    Rng rng(37);
    Parameters<float> p = init_parameters<float>(cfg, 37);
    testutil::randomize_parameters(p, rng);
    EncodedUtterance utt = testutil::random_utterance(rng, cfg);
    auto p1 = forward_probs(utt, p);
    auto p2 = forward_probs(utt, p);
    CHECK(std::memcmp(p1.data(), p2.data(), p1.size() * sizeof(float)) == 0);
}
