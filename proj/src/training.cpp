#include "modeboost/training.hpp"

#include "modeboost/error.hpp"
#include "modeboost/metrics.hpp"

namespace modeboost {

DesignMatrix design_rows(const features::FeatureMatrix& m, std::span<const std::size_t> rows, int horizon, Task task) {
    const std::size_t h = m.horizon_index(horizon);
    DesignMatrix d;
    d.rows = rows.size();
    d.cols = m.feature_count();
    d.values.reserve(d.rows * d.cols);
    d.targets.reserve(d.rows);
    for (std::size_t r : rows) {
        const auto row = m.row(r);
        d.values.insert(d.values.end(), row.begin(), row.end());
        d.targets.push_back(task == Task::Regression ? m.target_values[h][r]
                                                     : static_cast<double>(m.target_levels[h][r]));
    }
    return d;
}

TrainResult train_model(const features::FeatureMatrix& raw, const ModelSpec& spec, const TrainObserver* observer) {
    if (raw.scaled) throw Error(ErrorCode::AlreadyTransformed, "training expects an unscaled matrix");
    const Scaler scaler = fit_scaler(raw, raw.split, spec.scale_mode);
    const features::FeatureMatrix m = scaler.transform(raw);

    const auto train_rows = features::partition_rows(m, features::Partition::Train, spec.horizon);
    const auto valid_rows = features::partition_rows(m, features::Partition::Valid, spec.horizon);
    if (train_rows.empty()) throw Error(ErrorCode::EmptyTraining, "no training rows for horizon " + std::to_string(spec.horizon));

    const DesignMatrix train = design_rows(m, train_rows, spec.horizon, spec.params.task);
    const DesignMatrix valid = design_rows(m, valid_rows, spec.horizon, spec.params.task);
    const ValidationSet vset{valid.view(), valid.targets};

    TrainResult result = fit(train.view(), m.feature_names, train.targets, spec.params,
                             valid.rows > 0 ? &vset : nullptr, observer);
    result.model.scaler = scaler;
    result.model.labels = spec.labels;
    result.model.horizon = spec.horizon;
    result.model.config_hash = spec.config_hash;
    return result;
}

double validation_objective(const Ensemble& model, const features::FeatureMatrix& raw) {
    const auto rows = features::partition_rows(raw, features::Partition::Valid, model.horizon);
    if (rows.empty()) throw Error(ErrorCode::EmptyTraining, "no validation rows for horizon " + std::to_string(model.horizon));
    const features::FeatureMatrix sub = features::select_rows(raw, rows);
    const std::vector<double> pred = model.predict(sub);
    const std::size_t h = sub.horizon_index(model.horizon);
    if (model.task == Task::Regression) return rmse(sub.target_values[h], pred);
    std::vector<int> labels(sub.target_levels[h].begin(), sub.target_levels[h].end());
    std::vector<int> preds(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) preds[i] = static_cast<int>(pred[i]);
    return 1.0 - macro_f1(labels, preds, model.num_classes);
}

tune::Objective gbt_objective(const features::FeatureMatrix& raw, ModelSpec base) {
    return [&raw, base](const tune::Params& params, tune::TrialContext& ctx) {
        ModelSpec spec = base;
        spec.params = tune::apply_params(base.params, params);
        TrainObserver observer;
        observer.on_report = [&ctx](int round, double objective) { return ctx.report(round, objective); };
        const TrainResult result = train_model(raw, spec, &observer);
        return validation_objective(result.model, raw);
    };
}

}  // namespace modeboost
