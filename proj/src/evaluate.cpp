#include "modeboost/evaluate.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/training.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace modeboost {

double EvalReport::value(std::string_view entity, int horizon, std::string_view model, std::string_view metric) const {
    for (const auto& r : rows) {
        if (r.entity == entity && r.horizon == horizon && r.model == model && r.metric == metric) return r.value;
    }
    throw Error(ErrorCode::InvalidSpec, "no report cell " + std::string(entity) + "/" + std::to_string(horizon) + "/" +
                                            std::string(model) + "/" + std::string(metric));
}

namespace {

std::string render(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

struct RegressionCell {
    std::vector<double> truth;
    std::vector<double> pred;
};

void add_regression_rows(EvalReport& report, const std::string& entity, int horizon, const std::string& model,
                         const RegressionCell& c) {
    report.rows.push_back({entity, horizon, model, "rmse", rmse(c.truth, c.pred)});
    report.rows.push_back({entity, horizon, model, "mae", mae(c.truth, c.pred)});
}

void append_abs_errors(std::vector<double>& out, const RegressionCell& c) {
    for (std::size_t i = 0; i < c.truth.size(); ++i) out.push_back(std::fabs(c.truth[i] - c.pred[i]));
}

std::string header(const EvalReport& report) {
    std::ostringstream out;
    out << "# config_hash=" << report.config_hash << '\n';
    out << "# seed=" << report.seed << '\n';
    out << "# split=" << report.split.train_end << ',' << report.split.valid_end << ',' << report.split.length << '\n';
    for (const auto& n : report.notes) out << "# " << n << '\n';
    return out.str();
}

}  // namespace

EvalReport run_evaluation(const DemandPanel& panel, const features::FeatureMatrix& matrix,
                          const ForecastModels& models, std::span<const int> horizons, const EvalOptions& options) {
    if (matrix.entity_names != panel.entity_names()) {
        throw Error(ErrorCode::FeatureMismatch, "matrix entities differ from the panel's");
    }
    options.baseline_config.validate();
    EvalReport report;
    report.split = matrix.split;
    report.config_hash = options.config_hash;
    report.seed = options.seed;
    report.notes.push_back("baselines: " + options.baseline_config.describe());
    report.notes.push_back(std::string("f1=") + (options.f1_average == F1Average::Macro ? "macro" : "weighted"));

    const std::string f1_name = options.f1_average == F1Average::Macro ? "macro_f1" : "weighted_f1";
    std::map<std::string, std::map<int, std::vector<double>>> pooled_errors;
    const std::size_t E = panel.entity_count();

    for (int H : horizons) {
        const auto rows = features::partition_rows(matrix, features::Partition::Test, H);
        if (rows.empty()) throw Error(ErrorCode::NoTestRows, "no test rows for horizon " + std::to_string(H));
        const std::size_t h = matrix.horizon_index(H);
        const features::FeatureMatrix test = features::select_rows(matrix, rows);

        std::vector<std::vector<std::size_t>> by_entity(E);
        for (std::size_t i = 0; i < test.rows; ++i) by_entity[test.entity[i]].push_back(i);

        std::vector<std::pair<std::string, std::vector<double>>> model_preds;
        if (auto it = models.regression.find(H); it != models.regression.end()) {
            model_preds.emplace_back(models.name, it->second->predict(test, options.jobs));
        }
        for (auto kind : options.baselines) {
            std::vector<double> preds(test.rows);
            for (std::size_t e = 0; e < E; ++e) {
                if (by_entity[e].empty()) continue;
                std::vector<std::size_t> origins;
                for (std::size_t i : by_entity[e]) origins.push_back(test.step[i]);
                const auto f = baselines::forecast(kind, options.baseline_config, panel.series(e).values, panel.grid(),
                                                   matrix.split, origins, H);
                for (std::size_t j = 0; j < origins.size(); ++j) preds[by_entity[e][j]] = f[j];
            }
            model_preds.emplace_back(std::string(baselines::to_string(kind)), std::move(preds));
        }

        for (const auto& [name, preds] : model_preds) {
            RegressionCell all;
            for (std::size_t e = 0; e < E; ++e) {
                if (by_entity[e].empty()) continue;
                RegressionCell c;
                for (std::size_t i : by_entity[e]) {
                    c.truth.push_back(test.target_values[h][i]);
                    c.pred.push_back(preds[i]);
                }
                add_regression_rows(report, matrix.entity_names[e], H, name, c);
                all.truth.insert(all.truth.end(), c.truth.begin(), c.truth.end());
                all.pred.insert(all.pred.end(), c.pred.begin(), c.pred.end());
            }
            add_regression_rows(report, std::string(kAllEntities), H, name, all);
            append_abs_errors(pooled_errors[name][H], all);
        }

        if (auto it = models.classification.find(H); it != models.classification.end()) {
            const auto preds = it->second->predict(test, options.jobs);
            const int C = it->second->num_classes;
            std::vector<int> all_truth, all_pred;
            for (std::size_t e = 0; e < E; ++e) {
                if (by_entity[e].empty()) continue;
                std::vector<int> truth, pred;
                for (std::size_t i : by_entity[e]) {
                    truth.push_back(test.target_levels[h][i]);
                    pred.push_back(static_cast<int>(preds[i]));
                }
                report.rows.push_back({matrix.entity_names[e], H, models.name, "accuracy", accuracy(truth, pred)});
                report.rows.push_back({matrix.entity_names[e], H, models.name, f1_name,
                                       f1_score(truth, pred, C, options.f1_average)});
                all_truth.insert(all_truth.end(), truth.begin(), truth.end());
                all_pred.insert(all_pred.end(), pred.begin(), pred.end());
            }
            report.rows.push_back({std::string(kAllEntities), H, models.name, "accuracy", accuracy(all_truth, all_pred)});
            report.rows.push_back({std::string(kAllEntities), H, models.name, f1_name,
                                   f1_score(all_truth, all_pred, C, options.f1_average)});
        }
    }

    auto comparisons = options.comparisons;
    if (comparisons.empty() && !models.regression.empty()) {
        for (auto kind : options.baselines) comparisons.emplace_back(models.name, std::string(baselines::to_string(kind)));
    }
    for (const auto& [a, b] : comparisons) {
        const auto ia = pooled_errors.find(a);
        const auto ib = pooled_errors.find(b);
        if (ia == pooled_errors.end() || ib == pooled_errors.end()) {
            throw Error(ErrorCode::InvalidConfig, "cannot compare unknown models " + a + " and " + b);
        }
        // Pool over the horizons both sides were evaluated on.
        std::vector<double> ea, eb;
        for (const auto& [H, errs] : ia->second) {
            const auto jt = ib->second.find(H);
            if (jt == ib->second.end()) continue;
            ea.insert(ea.end(), errs.begin(), errs.end());
            eb.insert(eb.end(), jt->second.begin(), jt->second.end());
        }
        report.tests.push_back({a, b, paired_t_test(ea, eb)});
        TestResult w{0.0, 1.0, 0, TestMethod::Wilcoxon};
        try {
            w = wilcoxon_signed_rank(ea, eb);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::AllZeroDifferences) throw;
        }
        report.tests.push_back({a, b, w});
    }
    return report;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << header(report);
    out << "entity,horizon,model,metric,value\n";
    for (const auto& r : report.rows) {
        out << csv::escape(r.entity) << ',' << r.horizon << ',' << csv::escape(r.model) << ',' << r.metric << ','
            << render(r.value) << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

void write_significance_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << header(report);
    out << "model_a,model_b,method,statistic,p_value,n\n";
    for (const auto& t : report.tests) {
        out << csv::escape(t.model_a) << ',' << csv::escape(t.model_b) << ',' << to_string(t.result.method) << ','
            << render(t.result.statistic) << ',' << render(t.result.p_value) << ',' << t.result.n << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

void write_plot_data(const DemandPanel& panel, const std::filesystem::path& path, const std::string& config_hash) {
    std::ostringstream out;
    out << "# config_hash=" << config_hash << '\n';
    out << "entity,date,total\n";
    for (const auto& s : panel.all_series()) {
        for (std::size_t day = 0; day * 1440 < panel.length(); ++day) {
            double total = 0.0;
            for (std::size_t t = day * 1440; t < std::min(panel.length(), (day + 1) * 1440); ++t) total += s.values[t];
            const auto date = std::chrono::floor<std::chrono::days>(panel.grid().at(day * 1440));
            out << csv::escape(s.entity.raw_name) << ',' << format_date(date) << ',' << render(total) << '\n';
        }
    }
    csv::write_file_atomic(path, out.str());
}

GlobalLocalReport global_vs_local(const features::FeatureMatrix& matrix, const TrainParams& params,
                                  std::span<const int> horizons, ScaleMode scale_mode) {
    if (matrix.entity_names.size() < 2) throw Error(ErrorCode::SingleEntity, "global vs local needs >= 2 entities");
    using Clock = std::chrono::steady_clock;
    const auto seconds = [](Clock::duration d) { return std::chrono::duration<double>(d).count(); };
    const std::size_t E = matrix.entity_names.size();

    std::vector<features::FeatureMatrix> per_entity(E);
    {
        std::vector<std::vector<std::size_t>> rows(E);
        for (std::size_t r = 0; r < matrix.rows; ++r) rows[matrix.entity[r]].push_back(r);
        for (std::size_t e = 0; e < E; ++e) per_entity[e] = features::select_rows(matrix, rows[e]);
    }

    GlobalLocalReport report;
    for (int H : horizons) {
        ModelSpec spec;
        spec.horizon = H;
        spec.params = params;
        spec.params.task = Task::Regression;
        spec.scale_mode = scale_mode;

        auto t0 = Clock::now();
        const Ensemble pooled = train_model(matrix, spec).model;
        report.pooled_train_seconds += seconds(Clock::now() - t0);
        report.pooled_bytes += serialize(pooled).size();
        ++report.pooled_models;

        const std::size_t h = matrix.horizon_index(H);
        for (std::size_t e = 0; e < E; ++e) {
            const auto& sub = per_entity[e];
            t0 = Clock::now();
            const Ensemble local = train_model(sub, spec).model;
            report.local_train_seconds += seconds(Clock::now() - t0);
            report.local_bytes += serialize(local).size();
            ++report.local_models;

            const auto test_rows = features::partition_rows(sub, features::Partition::Test, H);
            if (test_rows.empty()) throw Error(ErrorCode::NoTestRows, "entity " + matrix.entity_names[e] + " has no test rows");
            const auto test = features::select_rows(sub, test_rows);
            const auto pp = pooled.predict(test);
            const auto lp = local.predict(test);
            const auto& truth = test.target_values[h];
            report.rows.push_back({matrix.entity_names[e], H, mae(truth, pp), rmse(truth, pp), mae(truth, lp),
                                   rmse(truth, lp)});
        }
    }
    return report;
}

void write_global_local_csv(const GlobalLocalReport& report, const std::filesystem::path& path,
                            const std::string& config_hash) {
    std::ostringstream out;
    out << "# config_hash=" << config_hash << '\n';
    out << "# pooled_models=" << report.pooled_models << " local_models=" << report.local_models << '\n';
    out << "# pooled_train_seconds=" << render(report.pooled_train_seconds)
        << " local_train_seconds=" << render(report.local_train_seconds) << '\n';
    out << "# pooled_bytes=" << report.pooled_bytes << " local_bytes=" << report.local_bytes << '\n';
    out << "entity,horizon,pooled_mae,pooled_rmse,local_mae,local_rmse\n";
    for (const auto& r : report.rows) {
        out << csv::escape(r.entity) << ',' << r.horizon << ',' << render(r.pooled_mae) << ',' << render(r.pooled_rmse)
            << ',' << render(r.local_mae) << ',' << render(r.local_rmse) << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

}  // namespace modeboost
