#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <thread>

#include "testutil.hpp"
#include "tinyintent/alloc_tracker.hpp"
#include "tinyintent/inference.hpp"
#include "tinyintent/trainer.hpp"

using namespace tinyintent;

namespace {

// A trained tiny model saved to a temp file, float and quantized variants.
struct Fixture {
    std::filesystem::path float_path;
    std::filesystem::path quant_path;
    TrainedModel model;

    Fixture() {
        Dataset ds = testutil::synthetic_dataset();
        TrainConfig tcfg;
        tcfg.batch_size = 8;
        tcfg.epochs = 5;
        tcfg.seed = 77;
        RunResult run = train_run(ds.train, ds.valid, ds.test, testutil::small_train_config(), tcfg);
        model = run.model;
        const auto dir = std::filesystem::temp_directory_path();
        float_path = dir / "tinyintent_inference_test_f.bin";
        quant_path = dir / "tinyintent_inference_test_q.bin";
        save_model(model, float_path);
        save_model(quantize_model(model), quant_path);
    }
    ~Fixture() {
        std::error_code ec;
        std::filesystem::remove(float_path, ec);
        std::filesystem::remove(quant_path, ec);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("engine encode matches the reference pipeline encoder") {
    InferenceEngine engine = InferenceEngine::load(fixture().float_path);
    const PipelineConfig pcfg = engine.config().pipeline();

    std::vector<std::string> cases = {
        "flight0x please",
        "MUSIC1Y the NOW",
        "caf\xc3\xa9 zzz\xc3\xa9\xc3\xa9 unknowntoken",
        "a",
        "trailing spaces   ",
        "   leading",
        "tab\tseparated\ttokens",
        std::string(500, 'q'),                       // one absurdly long token
        "supercalifragilisticexpialidocious twice supercalifragilisticexpialidocious",
    };
    // And one longer than max_seq_len.
    std::string long_text;
    for (int i = 0; i < 40; ++i) long_text += "w" + std::to_string(i) + " ";
    cases.push_back(long_text);

    EncodedUtterance from_engine;
    for (const std::string& text : cases) {
        CAPTURE(text);
        engine.encode_into(text, from_engine);
        EncodedUtterance ref = encode_utterance(text, fixture().model.word_vocab, fixture().model.char_vocab, pcfg);
        CHECK(from_engine.true_length == ref.true_length);
        CHECK(from_engine.word_ids == ref.word_ids);
        CHECK(from_engine.char_ids == ref.char_ids);
    }
}

TEST_CASE("random utterances: engine encode equals pipeline encode") {
    InferenceEngine engine = InferenceEngine::load(fixture().float_path);
    const PipelineConfig pcfg = engine.config().pipeline();
    Rng rng(4242);
    const auto& vocab_tokens = fixture().model.word_vocab.tokens();

    EncodedUtterance from_engine;
    for (int iter = 0; iter < 300; ++iter) {
        std::string text;
        const int n = 1 + static_cast<int>(rng.next_below(30));
        for (int t = 0; t < n; ++t) {
            if (t) text += ' ';
            if (rng.next_below(4) == 0)
                text += testutil::random_word(rng);  // OOV
            else
                text += vocab_tokens[2 + rng.next_below(vocab_tokens.size() - 2)];
        }
        engine.encode_into(text, from_engine);
        EncodedUtterance ref = encode_utterance(text, fixture().model.word_vocab, fixture().model.char_vocab, pcfg);
        CHECK(from_engine.word_ids == ref.word_ids);
        CHECK(from_engine.char_ids == ref.char_ids);
    }
}

TEST_CASE("quantized engine predictions match the float engine almost always") {
    InferenceEngine fe = InferenceEngine::load(fixture().float_path);
    InferenceEngine qe = InferenceEngine::load(fixture().quant_path);
    Dataset ds = testutil::synthetic_dataset();

    int agree = 0, total = 0;
    for (const Utterance& u : ds.test.items) {
        if (fe.infer(u.text).label_id == qe.infer(u.text).label_id) ++agree;
        ++total;
    }
    CHECK(agree >= total * 99 / 100);
}

TEST_CASE("inference is deterministic and engines load identically") {
    InferenceEngine e1 = InferenceEngine::load(fixture().quant_path);
    InferenceEngine e2 = InferenceEngine::load(fixture().quant_path);
    const std::string text = "music1y please now";
    IntentPrediction a = e1.infer(text);
    IntentPrediction b = e1.infer(text);
    IntentPrediction c = e2.infer(text);
    CHECK(a.label_id == b.label_id);
    CHECK(a.label_id == c.label_id);
    CHECK(std::memcmp(a.probabilities.data(), b.probabilities.data(),
                      a.probabilities.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.probabilities.data(), c.probabilities.data(),
                      a.probabilities.size() * sizeof(float)) == 0);
}

TEST_CASE("a copied engine gives identical outputs") {
    InferenceEngine engine = InferenceEngine::load(fixture().quant_path);
    InferenceEngine copy = engine;
    const std::string text = "weather2z today please";
    IntentPrediction a = engine.infer(text);
    IntentPrediction b = copy.infer(text);
    CHECK(a.label_id == b.label_id);
    CHECK(std::memcmp(a.probabilities.data(), b.probabilities.data(),
                      a.probabilities.size() * sizeof(float)) == 0);
}

TEST_CASE("prediction invariants: argmax, unit sum, valid label") {
    InferenceEngine engine = InferenceEngine::load(fixture().quant_path);
    Dataset ds = testutil::synthetic_dataset();
    IntentPrediction p;
    for (const Utterance& u : ds.test.items) {
        engine.infer_into(u.text, p);
        CHECK(p.label_id >= 0);
        CHECK(p.label_id < engine.config().num_labels);
        CHECK(p.label_name == engine.label_map().token(p.label_id));
        double sum = 0;
        float best = -1;
        for (float v : p.probabilities) {
            sum += v;
            best = std::max(best, v);
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
        CHECK(p.probabilities[static_cast<std::size_t>(p.label_id)] == best);
    }
}

TEST_CASE("empty text is an input error") {
    InferenceEngine engine = InferenceEngine::load(fixture().float_path);
    CHECK_THROWS_AS(engine.infer(""), InputError);
    CHECK_THROWS_AS(engine.infer("   \t  "), InputError);
}

TEST_CASE("zero heap growth across repeated inferences after warmup") {
    REQUIRE(alloc_tracker::available());
    InferenceEngine engine = InferenceEngine::load(fixture().quant_path);
    Dataset ds = testutil::synthetic_dataset();
    std::vector<std::string> texts;
    for (const Utterance& u : ds.test.items) texts.push_back(u.text);

    IntentPrediction p;
    for (int i = 0; i < 10; ++i) engine.infer_into(texts[static_cast<std::size_t>(i) % texts.size()], p);

    const auto before = alloc_tracker::stats();
    for (int i = 0; i < 200; ++i) engine.infer_into(texts[static_cast<std::size_t>(i) % texts.size()], p);
    const auto after = alloc_tracker::stats();
    CHECK(after.alloc_count == before.alloc_count);
    CHECK(after.live_bytes == before.live_bytes);
}

TEST_CASE("padding invariance through the full text pipeline") {
    // Same text encoded under two different max_seq_len paddings must give
    // bit-identical probabilities.
    const TrainedModel& model = fixture().model;
    ModelConfig wide = model.config;
    wide.max_seq_len = model.config.max_seq_len + 10;

    Parameters<float> wide_params = model.params;
    wide_params.config = wide;
    ForwardCache<float> cache(wide);

    PipelineConfig narrow_pcfg = model.config.pipeline();
    PipelineConfig wide_pcfg = wide.pipeline();

    Rng rng(31337);
    const auto& tokens = model.word_vocab.tokens();
    for (int iter = 0; iter < 200; ++iter) {
        std::string text;
        const int n = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(narrow_pcfg.max_seq_len)));
        for (int t = 0; t < n; ++t) {
            if (t) text += ' ';
            text += tokens[2 + rng.next_below(tokens.size() - 2)];
        }
        EncodedUtterance narrow = encode_utterance(text, model.word_vocab, model.char_vocab, narrow_pcfg);
        EncodedUtterance padded = encode_utterance(text, model.word_vocab, model.char_vocab, wide_pcfg);
        REQUIRE(narrow.true_length == padded.true_length);

        forward(narrow, wide_params, cache);
        std::vector<float> probs_narrow = cache.probs;
        forward(padded, wide_params, cache);
        CHECK(std::memcmp(probs_narrow.data(), cache.probs.data(), probs_narrow.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("engine construction validates the config") {
    LoadedModel loaded = load_model(fixture().float_path);
    loaded.config.max_word_len = 1;  // smaller than the conv kernels
    CHECK_THROWS_AS(InferenceEngine{loaded}, ValidationError);
}

TEST_CASE("per-thread engine copies give the single-thread answers") {
    InferenceEngine reference = InferenceEngine::load(fixture().quant_path);
    Dataset ds = testutil::synthetic_dataset();
    std::vector<std::string> texts;
    for (const Utterance& u : ds.test.items) texts.push_back(u.text);

    std::vector<int> expected;
    for (const std::string& t : texts) expected.push_back(reference.infer(t).label_id);

    const int n_threads = 4;
    std::vector<std::vector<int>> results(static_cast<std::size_t>(n_threads));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w]() {
            InferenceEngine own = reference;  // copies are independent
            IntentPrediction p;
            for (int rep = 0; rep < 5; ++rep)
                for (const std::string& t : texts) {
                    own.infer_into(t, p);
                    if (rep == 0) results[static_cast<std::size_t>(w)].push_back(p.label_id);
                }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const auto& r : results) CHECK(r == expected);
}
