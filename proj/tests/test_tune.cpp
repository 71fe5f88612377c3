#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/tune.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace modeboost;
using namespace modeboost::tune;

namespace {

SearchSpace quad_space() { return {ParamSpec::uniform("x", -5, 5), ParamSpec::uniform("y", -5, 5)}; }

double quadratic(const Params& p) { return std::pow(p.at("x") - 1.2, 2) + std::pow(p.at("y") + 2.1, 2); }

Objective plain(std::function<double(const Params&)> f) {
    return [f](const Params& p, TrialContext&) { return f(p); };
}

Trial completed(int id, double value, std::map<int, double> steps = {}) {
    Trial t;
    t.id = id;
    t.value = value;
    t.state = TrialState::Complete;
    t.intermediate = std::move(steps);
    return t;
}

}  // namespace

TEST(Space, ValidateAndContains) {
    EXPECT_THROW(validate({}), Error);
    EXPECT_THROW(validate({ParamSpec::uniform("a", 1, 1)}), Error);
    EXPECT_THROW(validate({ParamSpec::log_uniform("a", 0, 1)}), Error);
    EXPECT_THROW(validate({ParamSpec::categorical("a", {})}), Error);
    const auto i = ParamSpec::int_uniform("d", 3, 10);
    EXPECT_TRUE(i.contains(3));
    EXPECT_FALSE(i.contains(3.5));
    EXPECT_FALSE(i.contains(11));
    const auto c = ParamSpec::categorical("c", {"a", "b"});
    EXPECT_TRUE(c.contains(1));
    EXPECT_FALSE(c.contains(2));
}

TEST(Tpe, StartupAndDegenerateHistoriesStayInBounds) {
    SearchSpace space{ParamSpec::uniform("u", 0, 1), ParamSpec::log_uniform("l", 1e-3, 10),
                      ParamSpec::int_uniform("i", 2, 6), ParamSpec::categorical("c", {"p", "q", "r"})};
    Xoshiro256 rng(1);
    std::vector<Trial> history;
    for (int k = 0; k < 30; ++k) {
        const auto p = tpe_suggest(history, space, {}, rng);
        for (const auto& s : space) ASSERT_TRUE(s.contains(p.at(s.name))) << s.name << '=' << p.at(s.name);
        auto t = completed(k, 1.0);  // every objective identical
        t.params = p;
        history.push_back(t);
    }
}

TEST(Tpe, ConcentratesNearOptimum) {
    Study study;
    optimize(study, quad_space(), plain(quadratic), 60, 3, {});
    const auto* best = study.best();
    ASSERT_NE(best, nullptr);
    EXPECT_LT(*best->value, 0.5);
}

TEST(Prune, MedianRule) {
    std::vector<Trial> h;
    for (int i = 0; i < 4; ++i) h.push_back(completed(i, 1.0, {{25, static_cast<double>(i)}}));
    EXPECT_FALSE(median_prune(100.0, 25, h));  // fewer than 5 comparable trials
    h.push_back(completed(4, 1.0, {{25, 4.0}}));
    EXPECT_FALSE(median_prune(2.0, 25, h));  // exactly the median
    EXPECT_TRUE(median_prune(2.5, 25, h));
    EXPECT_FALSE(median_prune(100.0, 50, h));  // nobody reported at this step
    for (int i = 5; i < 10; ++i) h.push_back(completed(i, 1.0, {{25, static_cast<double>(i)}}));
    EXPECT_TRUE(median_prune(10.0, 25, h));
}

TEST(Prune, PrunedTrialsRecorded) {
    Study study;
    int calls = 0;
    const Objective obj = [&calls](const Params& p, TrialContext& ctx) {
        ++calls;
        const double v = p.at("x");
        for (int step = 25; step <= 100; step += 25) {
            if (ctx.report(step, v + 100.0 / step)) return v;
        }
        return v;
    };
    optimize(study, {ParamSpec::uniform("x", 0, 10)}, obj, 40, 7, {});
    EXPECT_EQ(calls, 40);
    const auto pruned = std::count_if(study.trials.begin(), study.trials.end(),
                                      [](const Trial& t) { return t.state == TrialState::Pruned; });
    EXPECT_GT(pruned, 0);
    for (const auto& t : study.trials) {
        if (t.state == TrialState::Pruned) EXPECT_FALSE(t.value.has_value() && t.state == TrialState::Complete);
    }
}

TEST(Study, FailuresRecordedAndDeterministic) {
    const Objective obj = [](const Params& p, TrialContext&) -> double {
        if (p.at("x") > 4.0) throw std::runtime_error("boom");
        return p.at("x");
    };
    Study a, b;
    optimize(a, {ParamSpec::uniform("x", 0, 5)}, obj, 20, 11, {});
    optimize(b, {ParamSpec::uniform("x", 0, 5)}, obj, 20, 11, {});
    ASSERT_EQ(a.trials.size(), 20u);
    bool failed = false;
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        EXPECT_EQ(a.trials[i].params, b.trials[i].params);
        if (a.trials[i].state == TrialState::Failed) {
            failed = true;
            EXPECT_EQ(a.trials[i].error, "boom");
        }
    }
    EXPECT_TRUE(failed);
}

TEST(Narrow, SubsetOfOriginalBounds) {
    const SearchSpace space{ParamSpec::uniform("u", 0, 10), ParamSpec::log_uniform("l", 0.01, 100),
                            ParamSpec::int_uniform("i", 1, 9), ParamSpec::categorical("c", {"a", "b"})};
    for (double u : {0.0, 3.0, 10.0}) {
        for (double narrow : {0.1, 0.5, 1.0}) {
            const Params best{{"u", u}, {"l", 0.01}, {"i", 9}, {"c", 1}};
            const auto n = narrow_space(space, best, narrow);
            for (std::size_t k = 0; k < space.size(); ++k) {
                EXPECT_GE(n[k].lo, space[k].lo);
                EXPECT_LE(n[k].hi, space[k].hi);
                EXPECT_LT(n[k].lo, n[k].hi + (space[k].numeric() ? 0.0 : 1.0));
            }
            EXPECT_NEAR(n[0].hi - n[0].lo, std::min(10.0, narrow * 10.0 + 1e-12), narrow * 10.0 / 2 + 1e-9);
        }
    }
}

TEST(CoarseToFine, PhaseTwoInsidePhaseOne) {
    const auto space = quad_space();
    const auto r = coarse_to_fine(space, plain(quadratic), 15, 15, 0.4, 5);
    EXPECT_EQ(r.phase1_trials, 15);
    for (std::size_t k = 0; k < space.size(); ++k) {
        EXPECT_GE(r.phase2_space[k].lo, space[k].lo);
        EXPECT_LE(r.phase2_space[k].hi, space[k].hi);
    }
    EXPECT_LE(r.best_value, r.phase1_best);
    EXPECT_EQ(r.study.trials.size(), 30u);
    const Objective failing = [](const Params&, TrialContext&) -> double { throw std::runtime_error("x"); };
    try {
        coarse_to_fine(space, failing, 3, 3, 0.5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ObjectiveFailure);
    }
}

TEST(Output, StudyCsvAndToml) {
    testutil::TempDir dir;
    const auto space = default_gbt_space();
    Study study;
    const Objective obj = [](const Params& p, TrialContext& ctx) {
        ctx.report(25, p.at("learning_rate"));
        return p.at("learning_rate");
    };
    optimize(study, space, obj, 3, 1, {});
    write_study_csv(study, space, dir / "s.csv");
    const auto text = csv::read_file(dir / "s.csv");
    EXPECT_NE(text.find("trial,state,metric,step_metrics,params_json_blob"), std::string::npos);
    EXPECT_NE(text.find("25:"), std::string::npos);
    const auto toml = params_toml(space, study.best()->params);
    EXPECT_EQ(toml.rfind("[train]", 0), 0u);
    EXPECT_NE(toml.find("max_depth = "), std::string::npos);
    const auto tp = apply_params(TrainParams{}, study.best()->params);
    EXPECT_DOUBLE_EQ(tp.learning_rate, study.best()->params.at("learning_rate"));
    EXPECT_THROW(apply_params(TrainParams{}, Params{{"bogus", 1.0}}), Error);
}
