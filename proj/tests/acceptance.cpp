// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "modeboost/baselines.hpp"
#include "modeboost/bench.hpp"
#include "modeboost/config.hpp"
#include "modeboost/error.hpp"
#include "modeboost/evaluate.hpp"
#include "modeboost/features.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/ingest.hpp"
#include "modeboost/labeling.hpp"
#include "modeboost/pipeline.hpp"
#include "modeboost/postprocess.hpp"
#include "modeboost/significance.hpp"
#include "modeboost/training.hpp"
#include "modeboost/tune.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace modeboost;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Collects failed checks; the first few messages end up in the detail line.
struct Checks {
    int failed = 0;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failed;
        if (notes.size() < 4) notes.push_back(what);
    }
    Outcome done(std::string summary) const {
        if (failed == 0) return {true, summary};
        std::string d = summary + "; " + std::to_string(failed) + " failed check(s):";
        for (const auto& n : notes) d += " [" + n + "]";
        return {false, d};
    }
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream o;
    o.precision(precision);
    o << v;
    return o.str();
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::size_t> len(300, 4320);
    std::uniform_real_distribution<double> alpha_dist(0.02, 0.98);
    const std::vector<int> windows{3, 17, 60, 240};
    const std::vector<int> spans{5, 60};
    const std::vector<int> periods{24, 96, 288};
    constexpr int kSeries = 1000;
    constexpr int kPoints = 48;
    Checks c;
    double worst = 0.0;
    const auto track = [&](double got, double want, double floor, const std::string& what) {
        const bool ok = oracle::close_rel(got, want, 1e-9, floor);
        if (std::isfinite(got) && std::isfinite(want)) {
            worst = std::max(worst, std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor, 1e-300}));
        }
        c.expect(ok, what + " got " + fmt(got, 17) + " want " + fmt(want, 17));
    };

    for (int s = 0; s < kSeries; ++s) {
        const std::size_t n = len(rng);
        auto x = oracle::random_series(rng, n, s % 2 == 1);
        x[n / 3] = std::max(x[n / 3], 1.0);
        double scale = 0.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> pts(kPoints);
        for (auto& p : pts) p = pick(rng);
        const std::string tag = "series " + std::to_string(s);

        const auto roll = features::rolling_features(x, windows);
        for (std::size_t w = 0; w < windows.size(); ++w) {
            for (std::size_t t : pts) {
                track(roll[w].values[t], oracle::roll_mean(x, windows[w], t), 0.0, tag + " roll_mean");
                track(roll[windows.size() + w].values[t], oracle::roll_max(x, windows[w], t), 0.0, tag + " roll_max");
            }
        }
        const auto ew = features::ewma_features(x, spans);
        for (std::size_t k = 0; k < spans.size(); ++k) {
            for (std::size_t t : pts) track(ew[k].values[t], oracle::ewma(x, spans[k], t), 1e-12, tag + " ewma");
        }
        const auto cv = features::rolling_cv(x, windows);
        for (std::size_t w = 0; w < windows.size(); ++w) {
            for (std::size_t t : pts) track(cv[w].values[t], oracle::cv(x, windows[w], t), 1e-12, tag + " cv");
        }
        const int P = periods[static_cast<std::size_t>(s) % periods.size()];
        const int K = 3;
        const auto fc = features::fourier_features(x, features::FourierConfig{P, K, false}, n / 2);
        for (std::size_t t : pts) {
            if (t + 1 < static_cast<std::size_t>(P)) continue;
            const auto o = oracle::fourier(x, P, K, t + 1);
            for (int k = 0; k < K; ++k) {
                track(fc[static_cast<std::size_t>(k)].values[t], o.a[static_cast<std::size_t>(k)], scale, tag + " fourier a");
                track(fc[static_cast<std::size_t>(K + k)].values[t], o.b[static_cast<std::size_t>(k)], scale, tag + " fourier b");
            }
        }
        const double alpha = alpha_dist(rng);
        const auto ses = baselines::ses_levels(x, alpha);
        for (std::size_t t : pts) track(ses[t], oracle::ses_level(x, alpha, t), 1e-12, tag + " ses");
        const auto cr = baselines::croston_forecasts(x, alpha, n);
        for (std::size_t t : pts) track(cr[t], oracle::croston(x, alpha, t), 0.0, tag + " croston");
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 30.0, "runtime " + fmt(secs) + " s >= 30 s");
    return c.done(std::to_string(kSeries) + " series x " + std::to_string(kPoints) +
                  " points per family, worst rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s");
}

Outcome statistical_oracles() {
    const auto t0 = Clock::now();
    Checks c;
    const std::vector<double> d{1, 2, 3}, zeros3(3, 0.0);
    const auto t = paired_t_test(d, zeros3);
    c.expect(std::abs(t.p_value - 0.0742) <= 1e-3, "paired t p=" + fmt(t.p_value, 6));
    c.expect(std::abs(t.p_value - oracle::paired_t_p(d, zeros3)) <= 1e-10, "paired t vs t-CDF oracle");

    const std::vector<double> five{1, 2, 3, 4, 5}, zeros5(5, 0.0);
    const auto w5 = wilcoxon_signed_rank(five, zeros5);
    c.expect(std::abs(w5.p_value - 0.0625) <= 1e-12, "wilcoxon n=5 p=" + fmt(w5.p_value, 8));

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> u(-9, 9);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial) % 12;
        std::vector<double> a(n), b(n, 0.0);
        for (auto& v : a) {
            do v = u(rng);
            while (v == 0);
        }
        const double got = wilcoxon_signed_rank(a, b).p_value;
        const double want = oracle::wilcoxon_enumerate(a);
        worst = std::max(worst, std::abs(got - want));
        c.expect(std::abs(got - want) <= 1e-12, "wilcoxon instance " + std::to_string(trial));
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 10.0, "runtime " + fmt(secs) + " s >= 10 s");
    return c.done("t p=" + fmt(t.p_value, 5) + ", wilcoxon p=" + fmt(w5.p_value) + ", 100 enumerations max |dp|=" +
                  fmt(worst, 3) + ", " + fmt(secs, 3) + " s");
}

// ---------------------------------------------------------------------------
// Desk-scale synthetic panel shared by the skill, latency and footprint checks.

struct Desk {
    explicit Desk(DemandPanel p) : panel(std::move(p)) {}

    RunConfig config;
    DemandPanel panel;
    features::FeatureMatrix matrix;
    labeling::LabelModel labels;
    std::unique_ptr<Ensemble> reg60;
    std::unique_ptr<Ensemble> cls15;
    double build_seconds = 0.0;
};

features::FeatureMatrix assemble(const DemandPanel& panel, const RunConfig& cfg, std::vector<int> horizons) {
    return features::assemble_matrix(panel, cfg.features, horizons, cfg.labeling, chronological_split(panel, cfg.split));
}

Ensemble train(const features::FeatureMatrix& m, const RunConfig& cfg, int H, Task task,
               const std::optional<labeling::LabelModel>& labels, std::uint64_t seed) {
    ModelSpec spec;
    spec.horizon = H;
    spec.params = cfg.train;
    spec.params.task = task;
    spec.params.seed = seed;
    spec.scale_mode = cfg.scale_mode;
    spec.labels = labels;
    spec.config_hash = cfg.hash();
    return train_model(m, spec).model;
}

const Desk& desk() {
    static const std::unique_ptr<Desk> d = [] {
        const auto t0 = Clock::now();
        constexpr std::uint64_t kSeed = 7;
        auto out = std::make_unique<Desk>(ingest::generate_synthetic(default_synthetic_spec(derive_seed(kSeed, "synth"))));
        out->config.seed = kSeed;
        out->matrix = assemble(out->panel, out->config, {15, 60});
        out->labels = labeling::fit_labels(out->panel, out->matrix.split, out->config.labeling);
        out->reg60 = std::make_unique<Ensemble>(train(out->matrix, out->config, 60, Task::Regression, std::nullopt, 1));
        out->cls15 = std::make_unique<Ensemble>(train(out->matrix, out->config, 15, Task::Classification, out->labels, 2));
        out->build_seconds = seconds_since(t0);
        return out;
    }();
    return *d;
}

Outcome forecast_skill() {
    const auto t0 = Clock::now();
    Checks c;
    const Desk& d = desk();
    ForecastModels fm;
    fm.regression[60] = d.reg60.get();
    fm.classification[15] = d.cls15.get();
    EvalOptions o;
    o.baselines = {baselines::Kind::SeasonalNaive, baselines::Kind::HistoricalAverage};
    const std::vector<int> hs{15, 60};
    const auto r = run_evaluation(d.panel, d.matrix, fm, hs, o);
    const double gbt = r.value(kAllEntities, 60, "modeboost", "rmse");
    const double sn = r.value(kAllEntities, 60, "snaive", "rmse");
    const double ha = r.value(kAllEntities, 60, "ha", "rmse");
    const double f1 = r.value(kAllEntities, 15, "modeboost", "macro_f1");
    c.expect(gbt <= 0.6 * sn, "GBT/snaive " + fmt(gbt / sn) + " > 0.6");
    c.expect(gbt <= 0.5 * ha, "GBT/HA " + fmt(gbt / ha) + " > 0.5");
    c.expect(f1 >= 0.85, "macro-F1 " + fmt(f1) + " < 0.85");

    // Diagnostic only: RMSE of a forecaster that knows the true intensity.
    const auto truth_spec = default_synthetic_spec(derive_seed(d.config.seed, "synth"));
    const std::size_t h60 = d.matrix.horizon_index(60);
    double ss = 0.0;
    const auto rows = features::partition_rows(d.matrix, features::Partition::Test, 60);
    for (std::size_t r : rows) {
        const double lambda = ingest::synthetic_intensity(truth_spec, d.matrix.entity[r], d.matrix.step[r] + 60);
        ss += std::pow(d.matrix.target_values[h60][r] - lambda, 2);
    }
    const double ideal = std::sqrt(ss / static_cast<double>(rows.size()));

    // Same generator without noise.
    auto spec = default_synthetic_spec(derive_seed(d.config.seed, "synth"));
    spec.noise = 0.0;
    const auto clean = ingest::generate_synthetic(spec);
    const auto cm = assemble(clean, d.config, {15});
    const auto labels = labeling::fit_labels(clean, cm.split, d.config.labeling);
    const auto cls = train(cm, d.config, 15, Task::Classification, labels, 2);
    ForecastModels cf;
    cf.classification[15] = &cls;
    EvalOptions co;
    co.baselines = {};
    const std::vector<int> h15{15};
    const double f1_clean = run_evaluation(clean, cm, cf, h15, co).value(kAllEntities, 15, "modeboost", "macro_f1");
    c.expect(f1_clean >= 0.98, "noiseless macro-F1 " + fmt(f1_clean) + " < 0.98");

    const double secs = seconds_since(t0) + d.build_seconds;
    c.expect(secs < 300.0, "runtime " + fmt(secs) + " s >= 300 s");
    return c.done("H=60 RMSE GBT " + fmt(gbt) + " snaive " + fmt(sn) + " HA " + fmt(ha) + " (ratios " + fmt(gbt / sn, 3) +
                  ", " + fmt(gbt / ha, 3) + "; known-intensity forecaster " + fmt(ideal) +
                  ", ratio to HA " + fmt(ideal / ha, 3) + "); H=15 macro-F1 " + fmt(f1, 3) + ", noiseless " + fmt(f1_clean, 3) + ", " +
                  fmt(secs, 3) + " s");
}

Outcome seasonal_naive_exactness() {
    Checks c;
    ingest::SyntheticSpec spec;
    spec.days = 14;
    spec.noise = 0.0;
    spec.weekly_factor = 1.0;
    spec.seed = 11;
    const auto panel = ingest::generate_synthetic(spec);
    double worst = 0.0;
    std::size_t checked = 0;
    for (int H : {1, 5, 15, 30, 60, 120, 360, 720, 1440}) {
        for (std::size_t e = 0; e < panel.entity_count(); ++e) {
            const auto& x = panel.series(e).values;
            for (std::size_t t = 1440; t + static_cast<std::size_t>(H) < x.size(); t += 7) {
                const double err = baselines::seasonal_naive(x, t, H) - x[t + static_cast<std::size_t>(H)];
                worst = std::max(worst, std::abs(err));
                ++checked;
            }
        }
    }
    c.expect(worst == 0.0, "seasonal naive max |error| " + fmt(worst));

    RunConfig cfg;
    const auto m = assemble(panel, cfg, {60});
    const auto model = train(m, cfg, 60, Task::Regression, std::nullopt, 3);
    ForecastModels fm;
    fm.regression[60] = &model;
    EvalOptions o;
    o.baselines = {baselines::Kind::SeasonalNaive};
    const std::vector<int> hs{60};
    const auto r = run_evaluation(panel, m, fm, hs, o);
    const double gbt = r.value(kAllEntities, 60, "modeboost", "rmse");
    const double sn = r.value(kAllEntities, 60, "snaive", "rmse");
    c.expect(sn == 0.0, "seasonal naive test RMSE " + fmt(sn));
    c.expect(gbt <= 0.5, "GBT test RMSE " + fmt(gbt) + " > 0.5");
    return c.done(std::to_string(checked) + " origins at 9 horizons with max |error| " + fmt(worst) +
                  "; GBT test RMSE " + fmt(gbt, 3));
}

// ---------------------------------------------------------------------------

struct Dense {
    std::vector<double> x, y;
    std::size_t rows = 0, cols = 0;
    std::vector<std::string> names;
    DataView view() const { return {x, rows, cols}; }
};

Dense random_dense(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int distinct) {
    std::uniform_int_distribution<int> level(0, distinct - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dense d;
    d.rows = rows;
    d.cols = cols;
    for (std::size_t f = 0; f < cols; ++f) d.names.push_back("f" + std::to_string(f));
    for (std::size_t r = 0; r < rows; ++r) {
        double target = 0.0;
        for (std::size_t f = 0; f < cols; ++f) {
            const double v = level(rng) * 0.25 - 3.0;
            d.x.push_back(v);
            target += (f % 2 ? -0.7 : 1.3) * v * v / (1.0 + f);
        }
        d.y.push_back(target + noise(rng));
    }
    return d;
}

TrainParams full_sample(int rounds, int depth) {
    TrainParams p;
    p.num_rounds = rounds;
    p.max_depth = depth;
    p.subsample = 1.0;
    p.colsample = 1.0;
    return p;
}

Outcome gbt_correctness() {
    Checks c;
    std::mt19937_64 rng(5150);

    const auto d = random_dense(rng, 400, 5, 40);
    const auto losses = fit(d.view(), d.names, d.y, full_sample(60, 4)).history;
    for (std::size_t i = 1; i < losses.size(); ++i) {
        c.expect(losses[i].train_loss <= losses[i - 1].train_loss + 1e-12, "loss rose at round " + std::to_string(i + 1));
    }

    double worst_newton = 0.0;
    for (double lambda : {0.0, 0.5, 1.0, 7.0}) {
        auto p = full_sample(1, 0);
        p.learning_rate = 1.0;
        p.base_score = 0.0;
        p.lambda = lambda;
        const auto m = fit(d.view(), d.names, d.y, p).model;
        double G = 0.0;
        for (double y : d.y) G += 0.0 - y;
        const double want = -G / (static_cast<double>(d.rows) + lambda);
        worst_newton = std::max(worst_newton, std::abs(m.predict_row(d.view().row(0)) - want));
    }
    c.expect(worst_newton <= 1e-12, "depth-0 step off by " + fmt(worst_newton));

    int identical = 0;
    std::uniform_int_distribution<int> distinct(2, 64);
    std::uniform_int_distribution<std::size_t> rows(50, 600), cols(1, 8);
    for (int i = 0; i < 50; ++i) {
        const auto m = random_dense(rng, rows(rng), cols(rng), distinct(rng));
        auto p = full_sample(8, 5);
        p.min_child_weight = 0.5;
        const auto hist = serialize(fit(m.view(), m.names, m.y, p).model);
        p.exact_greedy = true;
        const auto exact = serialize(fit(m.view(), m.names, m.y, p).model);
        if (hist == exact) ++identical;
        c.expect(hist == exact, "histogram != exact greedy on matrix " + std::to_string(i));
    }

    // Unequal corner weights; four single corners give every root split zero gain.
    const double corners[4][3] = {{0, 0, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    Dense xr;
    xr.cols = 2;
    xr.names = {"a", "b"};
    for (int k = 0; k < 4; ++k) {
        for (int rep = 0; rep <= k; ++rep) {
            xr.x.insert(xr.x.end(), {corners[k][0], corners[k][1]});
            xr.y.push_back(corners[k][2]);
        }
    }
    xr.rows = xr.y.size();
    auto p = full_sample(50, 2);
    p.task = Task::Classification;
    p.num_classes = 2;
    p.min_child_weight = 0.0;
    p.lambda = 0.1;
    p.learning_rate = 0.5;
    const auto xm = fit(xr.view(), xr.names, xr.y, p).model;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < xr.rows; ++r) correct += xm.predict_row(xr.view().row(r)) == xr.y[r];
    c.expect(correct == xr.rows, "XOR accuracy " + std::to_string(correct) + "/" + std::to_string(xr.rows));

    return c.done(std::to_string(losses.size()) + " rounds monotone, depth-0 max error " + fmt(worst_newton, 3) + ", " +
                  std::to_string(identical) + "/50 histogram==exact, XOR " + std::to_string(correct) + "/" +
                  std::to_string(xr.rows));
}

Outcome edge_latency() {
    Checks c;
    const Desk& d = desk();
    const Ensemble& model = *d.reg60;
    c.expect(model.trees.size() == 300, "model has " + std::to_string(model.trees.size()) + " trees");
    std::size_t depth = 0;
    for (const auto& t : model.trees) depth = std::max(depth, t.depth());
    c.expect(depth == 6, "max tree depth " + std::to_string(depth));

    const auto test_rows = features::partition_rows(d.matrix, features::Partition::Test, 60);
    const auto test = features::select_rows(d.matrix, test_rows);
    BenchOptions o;
    o.batch_size = 3500;
    o.repeats = 5;
    o.warmup = 1;
    const auto rep = bench_inference(model, test.values, o);
    c.expect(rep.total_ms < 15000.0, "batch " + fmt(rep.total_ms) + " ms >= 15 s");
    c.expect(rep.per_record_mean_ms <= 4.5, "per record " + fmt(rep.per_record_mean_ms) + " ms > 4.5 ms");
    c.expect(rep.outputs_identical, "batch and single-row outputs differ");
    return c.done(std::to_string(model.trees.size()) + " trees depth " + std::to_string(depth) + ", 3500-row batch " +
                  fmt(rep.total_ms) + " ms, per record mean " + fmt(rep.per_record_mean_ms, 3) + " ms (p99 " +
                  fmt(rep.p99_ms, 3) + " ms)");
}

Outcome memory_footprint() {
    Checks c;
    const Desk& d = desk();
    const auto cls60 = train(d.matrix, d.config, 60, Task::Classification, d.labels, 4);
    const double mb = 1024.0 * 1024.0;
    const double reg = static_cast<double>(serialize(*d.reg60).size()) / mb;
    const double cls = static_cast<double>(serialize(cls60).size()) / mb;
    c.expect(reg < 300.0, "regression " + fmt(reg) + " MB");
    c.expect(cls < 300.0, "classification " + fmt(cls) + " MB");
    c.expect(reg + cls < 500.0, "combined " + fmt(reg + cls) + " MB");
    return c.done("H=60 regression " + fmt(reg, 3) + " MB + classification " + fmt(cls, 3) + " MB = " +
                  fmt(reg + cls, 3) + " MB");
}

// ---------------------------------------------------------------------------

std::string small_toml(const fs::path& input) {
    return "[paths]\ninput = \"" + input.generic_string() +
           "\"\n"
           "[features]\nlags = [1, 15, 60]\nrolling_windows = [15, 60]\newma_spans = [15]\ncv_windows = [60]\n"
           "fourier_period = 60\n"
           "[train]\nrounds = 40\nmax_depth = 4\nhorizons = [15, 60]\nseed = 5\n";
}

Outcome determinism() {
    Checks c;
    testutil::TempDir dir;
    ingest::SyntheticSpec spec;
    spec.entities = 3;
    spec.days = 4;
    spec.seed = 19;
    write_panel_csv(ingest::generate_synthetic(spec), dir / "panel.csv");
    auto cfg = parse_config(small_toml(dir / "panel.csv"));

    std::vector<std::string> manifests;
    for (const char* name : {"a", "b"}) {
        cfg.paths.out_dir = dir / name;
        run_pipeline(cfg);
        manifests.push_back(csv::read_file(dir / name / "manifest.csv"));
    }
    c.expect(manifests[0] == manifests[1], "pipeline manifests differ between identical runs");
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir / "a");
        ++compared;
        c.expect(csv::read_file(entry.path()) == csv::read_file(dir / "b" / rel), rel.generic_string() + " differs");
    }
    cfg.jobs = 3;
    cfg.paths.out_dir = dir / "threads";
    run_pipeline(cfg);
    c.expect(csv::read_file(dir / "threads" / "manifest.csv") == manifests[0], "3-thread run differs from 1-thread");

    const auto matrix = features::read_matrix(dir / "a" / "matrix.mbfm");
    std::size_t predictions = 0;
    for (const char* file : {"regression_h60.mbgb", "classification_h15.mbgb"}) {
        const auto bytes = csv::read_file(dir / "a" / "models" / file);
        const auto loaded = deserialize(bytes);
        c.expect(serialize(loaded) == bytes, std::string(file) + " re-serialization differs");
        const auto again = load(dir / "a" / "models" / file);
        const auto p1 = loaded.predict(matrix);
        c.expect(p1 == again.predict(matrix), std::string(file) + " predictions differ after load");
        if (loaded.task == Task::Classification) {
            c.expect(loaded.predict_proba(matrix) == again.predict_proba(matrix), std::string(file) + " probabilities differ");
        }
        c.expect(from_json(to_json(loaded)).predict(matrix) == p1, std::string(file) + " JSON round trip differs");
        predictions += p1.size();
    }
    return c.done(std::to_string(compared) + " artifacts byte-identical across reruns and thread counts, " +
                  std::to_string(predictions) + " predictions identical after save/load");
}

Outcome tuning_sanity() {
    Checks c;
    using namespace tune;
    const SearchSpace space{ParamSpec::uniform("x", -5, 5), ParamSpec::uniform("y", -5, 5)};
    const auto quad = [](const Params& p) { return std::pow(p.at("x") - 1.3, 2) + 2.0 * std::pow(p.at("y") + 0.7, 2); };
    const Objective plain = [&](const Params& p, TrialContext&) { return quad(p); };
    std::vector<double> tpe_best, rnd_best;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (Sampler s : {Sampler::Tpe, Sampler::Random}) {
            Study st;
            StudyOptions o;
            o.sampler = s;
            optimize(st, space, plain, 40, seed, o);
            (s == Sampler::Tpe ? tpe_best : rnd_best).push_back(*st.best()->value);
        }
    }
    const auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    const double mt = median(tpe_best), mr = median(rnd_best);
    c.expect(mt < mr, "TPE median " + fmt(mt) + " not below random " + fmt(mr));

    // Curves improve monotonically towards each trial's final value, so the
    // eventual best trial is never above the median at any step.
    int studies = 0, pruned_total = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Objective curve = [&](const Params& p, TrialContext& ctx) {
            const double final_value = quad(p);
            for (int step = 25; step <= 200; step += 25) {
                if (ctx.report(step, final_value * (1.0 + 50.0 / step))) break;
            }
            return final_value;
        };
        Study st;
        optimize(st, space, curve, 40, seed, StudyOptions{});
        const Trial* best = nullptr;
        for (const auto& t : st.trials) {
            if (!best || quad(t.params) < quad(best->params)) best = &t;
            pruned_total += t.state == TrialState::Pruned;
        }
        c.expect(best->state == TrialState::Complete, "best trial pruned in study " + std::to_string(seed));
        ++studies;
    }
    c.expect(pruned_total > 0, "pruner never fired");

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(0, 1);
    const SearchSpace mixed{ParamSpec::uniform("u", -2, 3), ParamSpec::log_uniform("l", 1e-4, 1),
                            ParamSpec::int_uniform("i", 2, 9), ParamSpec::categorical("c", {"a", "b", "c"})};
    int narrowed = 0;
    for (int i = 0; i < 2000; ++i) {
        const double edge = u01(rng);
        const Params best{{"u", edge < 0.1 ? -2.0 : edge > 0.9 ? 3.0 : -2.0 + 5.0 * u01(rng)},
                          {"l", std::exp(std::log(1e-4) + u01(rng) * std::log(1e4))},
                          {"i", static_cast<double>(2 + static_cast<int>(u01(rng) * 8) % 8)},
                          {"c", static_cast<double>(static_cast<int>(u01(rng) * 3) % 3)}};
        const double narrow = std::max(1e-3, u01(rng));
        const auto inner = narrow_space(mixed, best, narrow);
        for (std::size_t k = 0; k < mixed.size(); ++k) {
            c.expect(inner[k].lo >= mixed[k].lo && inner[k].hi <= mixed[k].hi && inner[k].lo <= inner[k].hi,
                     "phase-2 bounds escape for " + mixed[k].name);
        }
        ++narrowed;
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = coarse_to_fine(space, plain, 15, 15, 0.3, seed);
        for (std::size_t k = 0; k < space.size(); ++k) {
            c.expect(r.phase2_space[k].lo >= space[k].lo && r.phase2_space[k].hi <= space[k].hi, "coarse_to_fine bounds");
        }
    }
    return c.done("median best TPE " + fmt(mt, 3) + " vs random " + fmt(mr, 3) + "; best trial kept in " +
                  std::to_string(studies) + " pruned studies (" + std::to_string(pruned_total) + " prunes); " +
                  std::to_string(narrowed) + " narrowings inside bounds");
}

Outcome leakage_audit() {
    Checks c;
    ingest::SyntheticSpec spec;
    spec.entities = 3;
    spec.days = 5;
    spec.seed = 23;
    const auto panel = ingest::generate_synthetic(spec);
    const auto split = chronological_split(panel);

    std::vector<std::pair<std::string, std::vector<double>>> mutated_series;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 500);
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        auto v = panel.series(e).values;
        for (std::size_t t = split.valid_end; t < v.size(); ++t) v[t] = std::round(u(rng));
        mutated_series.emplace_back(panel.series(e).entity.raw_name, std::move(v));
    }
    const auto mutated = testutil::make_panel(mutated_series, panel.grid().start);

    RunConfig cfg;
    cfg.train.num_rounds = 40;
    const auto artifacts = [&](const DemandPanel& p) {
        const auto m = assemble(p, cfg, {15, 60});
        const auto labels = labeling::fit_labels(p, m.split, cfg.labeling);
        std::vector<std::string> out;
        out.push_back(fit_scaler(m, m.split, cfg.scale_mode).bytes());
        std::ostringstream cuts, peaks;
        cuts.precision(17);
        peaks.precision(17);
        for (std::size_t e = 0; e < p.entity_count(); ++e) {
            const auto& x = p.series(e).values;
            const auto q = features::fit_adjusted_quantiles(std::span(x).first(m.split.train_end), cfg.features.adjusted);
            for (double cut : q.cuts) cuts << cut << ',';
            cuts << ';';
        }
        for (double pk : labels.peaks) peaks << pk << ',';
        for (const auto& t : labels.tertiles) peaks << t[0] << ':' << t[1] << ',';
        out.push_back(cuts.str());
        out.push_back(peaks.str());
        out.push_back(serialize(train(m, cfg, 60, Task::Regression, std::nullopt, 1)));
        out.push_back(serialize(train(m, cfg, 15, Task::Classification, labels, 2)));
        return out;
    };
    const auto a = artifacts(panel);
    const auto b = artifacts(mutated);
    const char* names[] = {"scaler", "quantile cuts", "peaks", "regression model", "classification model"};
    for (std::size_t i = 0; i < a.size(); ++i) c.expect(a[i] == b[i], std::string(names[i]) + " changed");

    // Append test: extending every series leaves all earlier rows untouched.
    auto extended_series = mutated_series;
    for (auto& [name, v] : extended_series) {
        for (int i = 0; i < 500; ++i) v.push_back(std::round(u(rng)));
    }
    const auto extended = testutil::make_panel(extended_series, panel.grid().start);
    const std::vector<int> h1{1};
    const auto base = features::assemble_matrix(mutated, cfg.features, h1, cfg.labeling, split);
    const SplitIndices longer{split.train_end, split.valid_end, extended.length()};
    const auto ext = features::assemble_matrix(extended, cfg.features, h1, cfg.labeling, longer);
    std::size_t compared = 0, e_row = 0;
    for (std::size_t r = 0; r < base.rows; ++r) {
        while (e_row < ext.rows && (ext.entity[e_row] != base.entity[r] || ext.step[e_row] != base.step[r])) ++e_row;
        if (e_row == ext.rows) {
            c.expect(false, "row missing from extended matrix");
            break;
        }
        const auto x = base.row(r);
        const auto y = ext.row(e_row);
        for (std::size_t f = 0; f < x.size(); ++f) {
            const bool same = x[f] == y[f] || (std::isnan(x[f]) && std::isnan(y[f]));
            c.expect(same, base.feature_names[f] + " not causal at step " + std::to_string(base.step[r]));
            ++compared;
        }
    }
    return c.done("5 training artifacts unchanged after rewriting " + std::to_string(split.length - split.valid_end) +
                  " test steps per entity; " + std::to_string(compared) + " feature values stable under append (" +
                  std::to_string(base.feature_count()) + " features)");
}

Outcome cleaning_rules() {
    Checks c;
    using ingest::TripRecord;
    const auto at = [](const char* s) { return *parse_timestamp(s); };
    std::vector<TripRecord> trips;
    int id = 0;
    for (int d = 0; d < 10; ++d) {
        for (int k = 0; k < 5; ++k) {
            const auto s = at("2022-06-01T07:30") + std::chrono::days(d) + std::chrono::minutes(7 * k);
            trips.push_back({"a" + std::to_string(id++), s, s + std::chrono::minutes(12), "Busy", "Quiet"});
        }
        for (int k = 0; k < 2; ++k) {
            const auto s = at("2022-06-01T18:00") + std::chrono::days(d) + std::chrono::minutes(9 * k);
            trips.push_back({"q" + std::to_string(id++), s, s + std::chrono::minutes(20), "Quiet", "Busy"});
        }
    }
    const auto s = at("2022-06-04T10:00");
    trips.push_back({"long", s, s + std::chrono::hours(24) + std::chrono::minutes(1), "Busy", "Quiet"});
    trips.push_back({"loop", s, s + std::chrono::seconds(30), "Busy", "Busy"});
    const auto r = ingest::clean_trips(trips);
    c.expect(r.report.too_long == 1, "too_long " + std::to_string(r.report.too_long));
    c.expect(r.report.short_round_trip == 1, "short_round_trip " + std::to_string(r.report.short_round_trip));
    c.expect(r.report.low_activity_stations == 1, "low stations " + std::to_string(r.report.low_activity_stations));
    c.expect(r.report.low_activity_trips == 20, "low trips " + std::to_string(r.report.low_activity_trips));
    c.expect(r.report.kept == 50 && r.kept.size() == 50, "kept " + std::to_string(r.kept.size()));
    c.expect(r.report.input == trips.size(), "input count");
    bool only_busy = true;
    for (const auto& t : r.kept) only_busy = only_busy && t.start_station == "Busy" && t.ride_id[0] == 'a';
    c.expect(only_busy, "unexpected kept row");
    c.expect(ingest::clean_trips(r.kept).kept == r.kept, "cleaning not idempotent");
    return c.done("input " + std::to_string(r.report.input) + ", removed 1 long + 1 round trip + 1 station (" +
                  std::to_string(r.report.low_activity_trips) + " rows), kept " + std::to_string(r.report.kept));
}

}  // namespace

// Optional arguments pick criteria by number; no arguments runs all of them.
int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"statistical test oracles", statistical_oracles},
        {"forecast skill on synthetic panel", forecast_skill},
        {"seasonal naive exactness", seasonal_naive_exactness},
        {"gradient boosting correctness", gbt_correctness},
        {"edge latency", edge_latency},
        {"memory footprint", memory_footprint},
        {"determinism and persistence", determinism},
        {"tuning sanity", tuning_sanity},
        {"leakage audits", leakage_audit},
        {"cleaning rules", cleaning_rules},
    };
    std::vector<bool> selected(criteria.size(), argc < 2);
    for (int a = 1; a < argc; ++a) {
        const auto k = static_cast<std::size_t>(std::atoi(argv[a]));
        if (k >= 1 && k <= criteria.size()) selected[k - 1] = true;
    }
    int failures = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        ++ran;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s  %2zu  %-34s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
