#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "testutil.hpp"
#include "tinyintent/trainer.hpp"

using namespace tinyintent;

namespace {

TrainConfig fast_config(std::uint64_t seed, int epochs = 6) {
    TrainConfig tcfg;
    tcfg.batch_size = 8;
    tcfg.epochs = epochs;
    tcfg.seed = seed;
    return tcfg;
}

}  // namespace

TEST_CASE("batch_ranges: 4478 items at batch 16 give 280 batches, last of 14") {
    auto ranges = batch_ranges(4478, 16);
    CHECK(ranges.size() == 280);
    CHECK(ranges.back().second - ranges.back().first == 14);
    for (std::size_t i = 0; i + 1 < ranges.size(); ++i) {
        CHECK(ranges[i].second - ranges[i].first == 16);
        CHECK(ranges[i].second == ranges[i + 1].first);
    }
    CHECK(ranges.front().first == 0);
    CHECK(ranges.back().second == 4478);
}

TEST_CASE("train_run is deterministic given the seed") {
    Dataset ds = testutil::synthetic_dataset();
    RunResult a = train_run(ds.train, ds.valid, ds.test, testutil::small_train_config(), fast_config(11, 3));
    RunResult b = train_run(ds.train, ds.valid, ds.test, testutil::small_train_config(), fast_config(11, 3));

    CHECK(a.test_accuracy == b.test_accuracy);
    CHECK(a.best_val_accuracy == b.best_val_accuracy);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
        CHECK(a.history[e].val_accuracy == b.history[e].val_accuracy);
    }
    auto ta = a.model.params.all_tensors();
    auto tb = b.model.params.all_tensors();
    for (std::size_t i = 0; i < ta.size(); ++i)
        CHECK(std::memcmp(ta[i]->values.data(), tb[i]->values.data(), ta[i]->size() * sizeof(float)) == 0);
}

TEST_CASE("a linearly trivial two-utterance task reaches validation accuracy 1.0") {
    DatasetSplit train, valid, test;
    train.items = {{"good stuff", "pos"}, {"bad stuff", "neg"}};
    valid.items = train.items;
    test.items = train.items;

    ModelConfig mcfg = testutil::small_train_config();
    TrainConfig tcfg = fast_config(3, 10);
    tcfg.batch_size = 2;
    RunResult r = train_run(train, valid, test, mcfg, tcfg);
    CHECK(r.best_val_accuracy == 1.0f);
    CHECK(r.test_accuracy == 1.0f);
}

TEST_CASE("loss on a single repeated utterance is non-increasing after epoch 2") {
    DatasetSplit train, valid, test;
    for (int i = 0; i < 4; ++i) train.items.push_back({"book a flight to boston", "flight"});
    valid.items = {train.items[0]};
    test.items = {train.items[0]};

    TrainConfig tcfg = fast_config(5, 8);
    tcfg.batch_size = 4;
    RunResult r = train_run(train, valid, test, testutil::small_train_config(), tcfg);
    REQUIRE(r.history.size() == 8);
    for (std::size_t e = 1; e + 1 < r.history.size(); ++e)
        CHECK(r.history[e + 1].train_loss <= r.history[e].train_loss + 1e-6f);
}

TEST_CASE("history and model selection invariants") {
    Dataset ds = testutil::synthetic_dataset();
    TrainConfig tcfg = fast_config(17, 5);
    RunResult r = train_run(ds.train, ds.valid, ds.test, testutil::small_train_config(), tcfg);

    CHECK(r.history.size() == static_cast<std::size_t>(tcfg.epochs));
    float best = -1.0f;
    for (const EpochStats& s : r.history) best = std::max(best, s.val_accuracy);
    CHECK(r.best_val_accuracy == best);
}

TEST_CASE("train_run rejects empty splits") {
    Dataset ds = testutil::synthetic_dataset();
    DatasetSplit empty;
    CHECK_THROWS_AS(train_run(empty, ds.valid, ds.test, testutil::small_train_config(), fast_config(1)), DataError);
    CHECK_THROWS_AS(train_run(ds.train, empty, ds.test, testutil::small_train_config(), fast_config(1)), DataError);
    CHECK_THROWS_AS(train_run(ds.train, ds.valid, empty, testutil::small_train_config(), fast_config(1)), DataError);
}

TEST_CASE("an absurd learning rate diverges with a training-diverged error") {
    Dataset ds = testutil::synthetic_dataset();
    TrainConfig tcfg = fast_config(1, 3);
    tcfg.lr = 1e20f;
    CHECK_THROWS_AS(train_run(ds.train, ds.valid, ds.test, testutil::small_train_config(), tcfg),
                    TrainingDivergedError);
}

TEST_CASE("evaluate: rigged head gives all-correct or all-wrong") {
    DatasetSplit train;
    train.items = {{"aa bb", "first"}, {"bb cc", "second"}};
    ModelConfig mcfg = testutil::small_train_config();
    TrainConfig tcfg = fast_config(1, 1);
    tcfg.batch_size = 2;
    RunResult r = train_run(train, train, train, mcfg, tcfg);

    // Zero head with a positive bias on label 0 always predicts "first".
    TrainedModel rigged = r.model;
    std::fill(rigged.params.dense_w.values.begin(), rigged.params.dense_w.values.end(), 0.0f);
    std::fill(rigged.params.dense_b.values.begin(), rigged.params.dense_b.values.end(), 0.0f);
    rigged.params.dense_b.values[0] = 1.0f;

    DatasetSplit all_first, all_second;
    all_first.items = {{"aa", "first"}, {"cc", "first"}, {"bb aa", "first"}};
    all_second.items = {{"aa", "second"}, {"cc", "second"}};
    CHECK(evaluate(rigged, all_first) == 1.0f);
    CHECK(evaluate(rigged, all_second) == 0.0f);

    // An intent string never seen in training scores as an error.
    DatasetSplit unseen;
    unseen.items = {{"aa", "mystery"}};
    CHECK(evaluate(rigged, unseen) == 0.0f);
}

TEST_CASE("mean and population variance") {
    SUBCASE("hand arithmetic: (0.98, 1.00) -> mean 0.99, variance 0.0001") {
        auto [mean, var] = mean_and_population_variance({0.98f, 1.00f});
        CHECK(mean == doctest::Approx(0.99).epsilon(1e-6));
        CHECK(var == doctest::Approx(0.0001).epsilon(1e-4));
    }
    SUBCASE("single value: variance zero") {
        auto [mean, var] = mean_and_population_variance({0.42f});
        CHECK(mean == doctest::Approx(0.42).epsilon(1e-6));
        CHECK(var == 0.0f);
    }
}

TEST_CASE("run_experiment: seeded runs, aggregation, reproducibility") {
    Dataset ds = testutil::synthetic_dataset();
    ModelConfig mcfg = testutil::small_train_config();
    TrainConfig tcfg = fast_config(0, 3);

    ExperimentResult ex = run_experiment(ds.train, ds.valid, ds.test, mcfg, tcfg, 3, 100);
    REQUIRE(ex.summary.run_accuracies.size() == 3);

    // Each run equals a direct train_run with the corresponding seed.
    for (int r = 0; r < 3; ++r) {
        TrainConfig one = tcfg;
        one.seed = 100 + static_cast<std::uint64_t>(r);
        RunResult direct = train_run(ds.train, ds.valid, ds.test, mcfg, one);
        CHECK(ex.summary.run_accuracies[static_cast<std::size_t>(r)] == direct.test_accuracy);
    }

    auto [mean, var] = mean_and_population_variance(ex.summary.run_accuracies);
    CHECK(ex.summary.mean_accuracy == mean);
    CHECK(ex.summary.variance == var);

    // Best run has the max accuracy, earliest on ties.
    float best = ex.summary.run_accuracies[static_cast<std::size_t>(ex.best_run)];
    for (int r = 0; r < 3; ++r) {
        CHECK(best >= ex.summary.run_accuracies[static_cast<std::size_t>(r)]);
        if (ex.summary.run_accuracies[static_cast<std::size_t>(r)] == best) {
            CHECK(ex.best_run <= r);
            break;
        }
    }
}

TEST_CASE("run_experiment: parallel execution matches sequential bit for bit") {
    Dataset ds = testutil::synthetic_dataset();
    ModelConfig mcfg = testutil::small_train_config();
    TrainConfig tcfg = fast_config(0, 2);

    ExperimentResult seq = run_experiment(ds.train, ds.valid, ds.test, mcfg, tcfg, 4, 7, nullptr, 1);
    ExperimentResult par = run_experiment(ds.train, ds.valid, ds.test, mcfg, tcfg, 4, 7, nullptr, 4);
    CHECK(seq.summary.run_accuracies == par.summary.run_accuracies);
    CHECK(seq.summary.mean_accuracy == par.summary.mean_accuracy);
    CHECK(seq.summary.variance == par.summary.variance);
    CHECK(seq.best_run == par.best_run);
}

TEST_CASE("run_experiment with a single run: mean is the accuracy, variance zero") {
    Dataset ds = testutil::synthetic_dataset();
    ExperimentResult ex = run_experiment(ds.train, ds.valid, ds.test, testutil::small_train_config(),
                                         fast_config(0, 2), 1, 5);
    REQUIRE(ex.summary.run_accuracies.size() == 1);
    CHECK(ex.summary.mean_accuracy == ex.summary.run_accuracies[0]);
    CHECK(ex.summary.variance == 0.0f);
}

TEST_CASE("the synthetic corpus trains to high accuracy") {
    Dataset ds = testutil::synthetic_dataset();
    RunResult r = train_run(ds.train, ds.valid, ds.test, testutil::small_train_config(), fast_config(2, 6));
    CHECK(r.test_accuracy >= 0.9f);
}

TEST_CASE("the full default architecture converges at its deployment operating point") {
    // Default dims (50/15 embeddings, 3-4-5 convs with 10/20/30 filters,
    // 128-unit LSTM), default optimizer settings, batch 16. A scaling or
    // gradient-routing defect shows up here as a failure to fit.
    testutil::SyntheticSpec spec;
    spec.n_labels = 6;
    spec.train_per_label = 120;
    spec.valid_per_label = 20;
    spec.test_per_label = 20;
    Dataset ds = testutil::synthetic_dataset(spec);

    ModelConfig mcfg;  // stock architecture
    TrainConfig tcfg;  // stock optimizer: lr 0.001, batch 16
    tcfg.epochs = 6;
    tcfg.seed = 9;
    RunResult r = train_run(ds.train, ds.valid, ds.test, mcfg, tcfg);
    CHECK(r.test_accuracy >= 0.98f);
    // Loss actually decreased over training.
    CHECK(r.history.back().train_loss < 0.25f * r.history.front().train_loss);
}
