#include "modeboost/error.hpp"
#include "modeboost/features.hpp"
#include "modeboost/ingest.hpp"
#include "modeboost/postprocess.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace modeboost;

namespace {

features::FeatureMatrix tiny_matrix() {
    features::FeatureMatrix m;
    m.feature_names = {"entity_code", "demand", "flat"};
    m.entity_names = {"a", "b"};
    m.horizons = {1};
    m.split = {3, 4, 6};
    m.rows = 4;
    m.values = {0, 0, 7, 1, 200, 7, 0, 100, 7, 1, 400, 7};
    m.entity = {0, 1, 0, 1};
    m.step = {0, 1, 2, 4};
    m.target_values = {{1, 2, 3, 4}};
    m.target_levels = {{0, 0, 0, 0}};
    return m;
}

}  // namespace

TEST(Scaler, MinMaxPooledOverTrainingRows) {
    const auto m = tiny_matrix();
    const auto s = fit_scaler(m, m.split, ScaleMode::MinMax);
    const auto& c = s.columns()[1];
    EXPECT_EQ(c.offset, 0.0);
    EXPECT_EQ(c.spread, 200.0);  // step 4 row is outside training
    EXPECT_TRUE(s.columns()[0].categorical);
    EXPECT_DOUBLE_EQ(s.transform_value(1, 50.0), 0.25);
    EXPECT_DOUBLE_EQ(s.inverse_value(1, 0.25), 50.0);
    EXPECT_EQ(s.transform_value(2, 7.0), 0.0);
    EXPECT_EQ(s.transform_value(0, 1.0), 1.0);
}

TEST(Scaler, ZScoreUsesPopulationStd) {
    const auto m = tiny_matrix();
    const auto s = fit_scaler(m, m.split, ScaleMode::ZScore);
    EXPECT_DOUBLE_EQ(s.columns()[1].offset, 100.0);
    EXPECT_DOUBLE_EQ(s.columns()[1].spread, std::sqrt(20000.0 / 3.0));
}

TEST(Scaler, TransformRoundTripAndGuards) {
    const auto m = tiny_matrix();
    const auto s = fit_scaler(m, m.split);
    const auto t = s.transform(m);
    EXPECT_TRUE(t.scaled);
    for (std::size_t a = 0; a < m.rows; ++a)
        for (std::size_t b = 0; b < m.rows; ++b)
            if (m.at(a, 1) > m.at(b, 1)) EXPECT_GT(t.at(a, 1), t.at(b, 1));
    try {
        s.transform(t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AlreadyTransformed);
    }
    const auto back = s.inverse_transform(t);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (i % 3 == 2) continue;  // constant column is not invertible
        EXPECT_NEAR(back.values[i], m.values[i], 1e-9);
    }
    auto renamed = m;
    renamed.feature_names[2] = "other";
    try {
        s.transform(renamed);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FeatureMismatch);
    }
}

TEST(Scaler, SerialisationRoundTrip) {
    const auto m = tiny_matrix();
    const auto s = fit_scaler(m, m.split, ScaleMode::ZScore);
    binary::Writer w;
    s.write(w);
    const std::string bytes = w.take();
    binary::Reader r(bytes);
    const auto back = Scaler::read(r);
    EXPECT_EQ(back.bytes(), s.bytes());
    EXPECT_EQ(back.mode(), ScaleMode::ZScore);
}

TEST(Scaler, EmptyTrainingThrows) {
    auto m = tiny_matrix();
    m.split = {0, 4, 6};
    try {
        fit_scaler(m, m.split);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyTraining);
    }
}

TEST(Encode, SortedAndDuplicates) {
    const std::vector<std::string> names{"B", "A"};
    const auto codes = encode_entities(names);
    EXPECT_EQ(codes.at("A"), 0u);
    EXPECT_EQ(codes.at("B"), 1u);
    EXPECT_EQ(encode_entities(names), codes);
    const std::vector<std::string> dup{"A", "A"};
    EXPECT_THROW(encode_entities(dup), Error);
}

// The scaler fitted on the real pipeline matrix ignores test-span values.
TEST(Scaler, IgnoresTestSpan) {
    ingest::SyntheticSpec spec;
    spec.entities = 2;
    spec.days = 3;
    const auto panel = ingest::generate_synthetic(spec);
    const auto split = chronological_split(panel);
    const std::vector<int> hs{5};
    const auto m = features::assemble_matrix(panel, features::FeatureConfig{}, hs, {}, split);
    auto mutated = m;
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (m.step[r] >= split.valid_end)
            for (auto& v : mutated.row(r)) v *= 3.0;
    }
    EXPECT_EQ(fit_scaler(m, split).bytes(), fit_scaler(mutated, split).bytes());
}
