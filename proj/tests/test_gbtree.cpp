#include "modeboost/error.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/ingest.hpp"
#include "modeboost/training.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace modeboost;

namespace {

struct Data {
    std::vector<double> x;
    std::vector<double> y;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::string> names;

    DataView view() const { return {x, rows, cols}; }
};

Data random_regression(std::uint64_t seed, std::size_t rows, std::size_t cols, int distinct) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> level(0, distinct - 1);
    std::normal_distribution<double> noise(0.0, 0.3);
    Data d;
    d.rows = rows;
    d.cols = cols;
    for (std::size_t c = 0; c < cols; ++c) d.names.push_back("f" + std::to_string(c));
    for (std::size_t r = 0; r < rows; ++r) {
        double target = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = level(rng) * 0.5;
            d.x.push_back(v);
            target += (c % 2 ? -1.0 : 1.0) * v * (1.0 + c);
        }
        d.y.push_back(target + noise(rng));
    }
    return d;
}

TrainParams plain(int rounds, int depth) {
    TrainParams p;
    p.num_rounds = rounds;
    p.max_depth = depth;
    p.subsample = 1.0;
    p.colsample = 1.0;
    return p;
}

}  // namespace

TEST(Fit, ConstantTargetPredictsConstant) {
    auto d = random_regression(1, 50, 3, 10);
    std::fill(d.y.begin(), d.y.end(), 5.0);
    const auto r = fit(d.view(), d.names, d.y, plain(10, 3));
    for (std::size_t i = 0; i < d.rows; ++i) EXPECT_DOUBLE_EQ(r.model.predict_rows(d.view().row(i))[0], 5.0);
    for (const auto& t : r.model.trees) EXPECT_EQ(t.nodes.size(), 1u);
}

TEST(Fit, DepthZeroSingleRoundIsNewtonStep) {
    const auto d = random_regression(2, 40, 2, 8);
    auto p = plain(1, 0);
    p.base_score = 0.0;
    p.learning_rate = 1.0;
    p.lambda = 2.5;
    const auto r = fit(d.view(), d.names, d.y, p);
    double G = 0.0;
    for (double y : d.y) G += 0.0 - y;
    const double expected = -G / (static_cast<double>(d.rows) + p.lambda);
    EXPECT_NEAR(r.model.predict_rows(d.view().row(0))[0], expected, 1e-12);

    p.lambda = 0.0;
    p.base_score.reset();
    const auto mean_model = fit(d.view(), d.names, d.y, p);
    double mean = 0.0;
    for (double y : d.y) mean += y;
    mean /= static_cast<double>(d.rows);
    EXPECT_NEAR(mean_model.model.predict_rows(d.view().row(3))[0], mean, 1e-12);
}

TEST(Fit, TrainingLossNonIncreasing) {
    const auto d = random_regression(3, 300, 4, 20);
    const auto r = fit(d.view(), d.names, d.y, plain(40, 4));
    ASSERT_EQ(r.history.size(), 40u);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        EXPECT_LE(r.history[i].train_loss, r.history[i - 1].train_loss + 1e-12);
    }
}

TEST(Fit, RootSplitMatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = random_regression(100 + seed, 120, 3, 12);
        auto p = plain(1, 1);
        p.learning_rate = 1.0;
        const auto r = fit(d.view(), d.names, d.y, p);
        const double base = r.model.base_scores[0];
        std::vector<double> g(d.rows);
        for (std::size_t i = 0; i < d.rows; ++i) g[i] = base - d.y[i];
        const auto best = oracle::best_split(d.x, d.rows, d.cols, g, p.lambda, p.gamma, p.min_child_weight);
        const auto& root = r.model.trees[0].nodes[0];
        ASSERT_EQ(root.feature, best.feature) << seed;
        EXPECT_EQ(root.threshold, best.threshold);
        EXPECT_NEAR(root.gain, best.gain, 1e-9 * std::max(1.0, best.gain));
    }
}

TEST(Fit, HistogramEqualsExactGreedyWhenFewDistinct) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = random_regression(200 + seed, 200, 4, 30);
        auto p = plain(5, 4);
        const auto hist = fit(d.view(), d.names, d.y, p);
        p.exact_greedy = true;
        const auto exact = fit(d.view(), d.names, d.y, p);
        EXPECT_EQ(serialize(hist.model), serialize(exact.model)) << seed;
    }
}

// The four XOR corners alone give every root split exactly zero gain, so the
// corners are replicated 1, 2, 3 and 4 times to break the symmetry.
TEST(Fit, XorReachesPerfectAccuracy) {
    const double corners[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    Data d;
    d.cols = 2;
    d.names = {"a", "b"};
    for (int c = 0; c < 4; ++c) {
        for (int k = 0; k <= c; ++k) {
            d.x.push_back(corners[c][0]);
            d.x.push_back(corners[c][1]);
            d.y.push_back(corners[c][2]);
        }
    }
    d.rows = d.y.size();
    auto p = plain(50, 2);
    p.task = Task::Classification;
    p.num_classes = 2;
    p.min_child_weight = 0.0;
    p.lambda = 0.1;
    p.learning_rate = 0.5;
    const auto r = fit(d.view(), d.names, d.y, p);
    for (const auto& c : corners) {
        EXPECT_EQ(r.model.predict_row(std::vector<double>{c[0], c[1]}), c[2]);
    }
}

TEST(Fit, ZeroRoundClassifierIsUniform) {
    Data d;
    d.rows = 3;
    d.cols = 1;
    d.names = {"a"};
    d.x = {0, 1, 2};
    d.y = {0, 1, 2};
    auto p = plain(0, 2);
    p.task = Task::Classification;
    const auto r = fit(d.view(), d.names, d.y, p);
    const auto pr = r.model.predict_proba_row(std::vector<double>{1.0});
    for (double v : pr) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
    EXPECT_EQ(r.model.trees.size(), 0u);
}

TEST(Fit, ZeroRoundRegressorPredictsBase) {
    const auto d = random_regression(4, 10, 2, 5);
    auto p = plain(0, 2);
    p.base_score = 3.5;
    const auto r = fit(d.view(), d.names, d.y, p);
    EXPECT_EQ(r.model.predict_rows(d.x), std::vector<double>(10, 3.5));
    for (const auto& [name, gain] : feature_importance(r.model)) EXPECT_EQ(gain, 0.0);
}

TEST(Fit, ValidationErrors) {
    auto d = random_regression(5, 10, 2, 5);
    const auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::UsageError;
    };
    EXPECT_EQ(code_of([&] { fit(DataView{d.x, 1, 2}, d.names, std::span(d.y).first(1), plain(1, 1)); }),
              ErrorCode::EmptyMatrix);
    EXPECT_EQ(code_of([&] { fit(d.view(), std::vector<std::string>{"a"}, d.y, plain(1, 1)); }),
              ErrorCode::FeatureMismatch);
    EXPECT_EQ(code_of([&] { fit(d.view(), d.names, std::span(d.y).first(5), plain(1, 1)); }),
              ErrorCode::LengthMismatch);
    auto p = plain(1, 1);
    p.task = Task::Classification;
    EXPECT_EQ(code_of([&] { fit(d.view(), d.names, d.y, p); }), ErrorCode::LabelOutOfRange);
    d.x[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(code_of([&] { fit(d.view(), d.names, d.y, plain(1, 1)); }), ErrorCode::NonFiniteFeature);
    auto bad = plain(1, 1);
    bad.learning_rate = 0.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Fit, DeterministicForSeed) {
    const auto d = random_regression(6, 400, 5, 40);
    TrainParams p;
    p.num_rounds = 20;
    p.seed = 9;
    const auto a = fit(d.view(), d.names, d.y, p);
    const auto b = fit(d.view(), d.names, d.y, p);
    EXPECT_EQ(serialize(a.model), serialize(b.model));
    p.seed = 10;
    EXPECT_NE(serialize(fit(d.view(), d.names, d.y, p).model), serialize(a.model));
}

TEST(Fit, ParallelMatchesSerial) {
    const auto d = random_regression(7, 500, 6, 40);
    auto p = plain(10, 5);
    const auto a = fit(d.view(), d.names, d.y, p);
    p.jobs = 4;
    const auto b = fit(d.view(), d.names, d.y, p);
    EXPECT_EQ(serialize(a.model), serialize(b.model));
}

// Greedy growth means a larger min_child_weight can pick a different split
// higher up and end with more nodes, so only the per-leaf bound is checked.
TEST(Fit, MinChildWeightBoundsEveryChild) {
    const auto d = random_regression(13, 300, 4, 30);
    for (double mcw : {0.0, 2.0, 10.0, 40.0}) {
        auto p = plain(3, 6);
        p.min_child_weight = mcw;
        const auto m = fit(d.view(), d.names, d.y, p).model;
        for (const auto& t : m.trees) {
            for (std::size_t i = 1; i < t.nodes.size(); ++i) EXPECT_GE(t.nodes[i].cover, mcw);
        }
    }
    auto p = plain(1, 6);
    p.min_child_weight = 1e9;
    EXPECT_EQ(fit(d.view(), d.names, d.y, p).model.node_count(), 1u);
}

TEST(Fit, GammaShrinksSingleTree) {
    const auto d = random_regression(8, 300, 4, 30);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double gamma : {0.0, 1.0, 10.0, 100.0, 1e6}) {
        auto p = plain(1, 6);
        p.gamma = gamma;
        const auto n = fit(d.view(), d.names, d.y, p).model.node_count();
        EXPECT_LE(n, prev);
        prev = n;
    }
    EXPECT_EQ(prev, 1u);
}

TEST(Fit, EarlyStoppingKeepsBestPrefix) {
    const auto train = random_regression(9, 200, 3, 20);
    const auto valid = random_regression(10, 100, 3, 20);
    auto p = plain(200, 6);
    p.learning_rate = 0.5;
    p.early_stopping_rounds = 5;
    p.min_child_weight = 0.0;
    p.lambda = 0.0;
    const ValidationSet vs{valid.view(), valid.y};
    const auto r = fit(train.view(), train.names, train.y, p, &vs);
    EXPECT_LT(r.model.rounds(), 200u);
    EXPECT_EQ(static_cast<int>(r.model.rounds()), r.best_round);
    double best = r.history[0].valid_loss;
    for (const auto& h : r.history) best = std::min(best, h.valid_loss);
    EXPECT_DOUBLE_EQ(r.history[static_cast<std::size_t>(r.best_round) - 1].valid_loss, best);
}

TEST(Fit, ObserverCanStop) {
    const auto d = random_regression(11, 100, 3, 20);
    const auto v = random_regression(12, 50, 3, 20);
    TrainObserver obs;
    std::vector<int> seen;
    obs.on_report = [&](int round, double) {
        seen.push_back(round);
        return round >= 50;
    };
    const ValidationSet vs{v.view(), v.y};
    const auto r = fit(d.view(), d.names, d.y, plain(300, 2), &vs, &obs);
    EXPECT_EQ(seen, (std::vector<int>{25, 50}));
    EXPECT_TRUE(r.stopped_by_observer);
    EXPECT_EQ(r.model.rounds(), 50u);
}

TEST(Model, SaveLoadAndJsonRoundTrip) {
    testutil::TempDir dir;
    const auto d = random_regression(13, 200, 3, 20);
    auto p = plain(15, 3);
    p.task = Task::Classification;
    std::vector<double> y(d.rows);
    for (std::size_t i = 0; i < d.rows; ++i) y[i] = static_cast<double>(i % 3);
    auto model = fit(d.view(), d.names, y, p).model;
    model.horizon = 15;
    model.config_hash = "abc";
    save(model, dir / "m.mbgb");
    const auto back = load(dir / "m.mbgb");
    EXPECT_EQ(serialize(back), serialize(model));
    EXPECT_EQ(back.predict_rows(d.x), model.predict_rows(d.x));
    const auto js = from_json(to_json(model));
    EXPECT_EQ(js.predict_rows(d.x), model.predict_rows(d.x));
    EXPECT_EQ(js.config_hash, "abc");
}

TEST(Model, CorruptAndFutureVersion) {
    const auto d = random_regression(14, 50, 2, 10);
    const auto bytes = serialize(fit(d.view(), d.names, d.y, plain(3, 2)).model);
    const auto code_of = [](std::string_view b) {
        try {
            deserialize(b);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::UsageError;
    };
    EXPECT_EQ(code_of(std::string_view(bytes).substr(0, bytes.size() / 2)), ErrorCode::CorruptFile);
    EXPECT_EQ(code_of(bytes + "x"), ErrorCode::CorruptFile);
    std::string future = bytes;
    future[5] = 2;
    EXPECT_EQ(code_of(future), ErrorCode::VersionMismatch);
    EXPECT_EQ(code_of("nonsense"), ErrorCode::CorruptFile);
}

TEST(Model, FeatureImportanceSingleFeature) {
    auto d = random_regression(15, 100, 1, 20);
    const auto imp = feature_importance(fit(d.view(), d.names, d.y, plain(5, 3)).model);
    ASSERT_EQ(imp.size(), 1u);
    EXPECT_GT(imp.at("f0"), 0.0);
}

TEST(Model, TreeChildrenAfterParent) {
    const auto d = random_regression(16, 300, 4, 30);
    const auto m = fit(d.view(), d.names, d.y, plain(5, 6)).model;
    for (const auto& t : m.trees) {
        EXPECT_LE(t.depth(), 6u);
        for (std::size_t i = 0; i < t.nodes.size(); ++i) {
            if (t.nodes[i].is_leaf()) continue;
            EXPECT_GT(static_cast<std::size_t>(t.nodes[i].left), i);
            EXPECT_GT(static_cast<std::size_t>(t.nodes[i].right), i);
        }
    }
}

TEST(Training, ScalerEmbeddedAndPredictionsOnRawRows) {
    ingest::SyntheticSpec spec;
    spec.entities = 2;
    spec.days = 3;
    const auto panel = ingest::generate_synthetic(spec);
    const auto split = chronological_split(panel);
    const std::vector<int> hs{15};
    const auto m = features::assemble_matrix(panel, features::FeatureConfig{}, hs, {}, split);
    ModelSpec ms;
    ms.horizon = 15;
    ms.params.num_rounds = 20;
    const auto r = train_model(m, ms);
    ASSERT_TRUE(r.model.scaler.has_value());
    const auto batch = r.model.predict(m);
    for (std::size_t i = 0; i < m.rows; i += 97) EXPECT_EQ(batch[i], r.model.predict_row(m.row(i)));
    const auto scaled = r.model.scaler->transform(m);
    EXPECT_EQ(r.model.predict(scaled), batch);
    EXPECT_GE(validation_objective(r.model, m), 0.0);
}
