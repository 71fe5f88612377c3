#pragma once

#include "modeboost/features.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/labeling.hpp"
#include "modeboost/postprocess.hpp"
#include "modeboost/tune.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modeboost {

/// Contiguous copy of selected rows with one target column.
struct DesignMatrix {
    std::vector<double> values;
    std::vector<double> targets;
    std::size_t rows = 0;
    std::size_t cols = 0;

    DataView view() const { return {values, rows, cols}; }
};

/// Targets are raw values (regression) or class levels (classification).
DesignMatrix design_rows(const features::FeatureMatrix& m, std::span<const std::size_t> rows, int horizon, Task task);

struct ModelSpec {
    int horizon = 60;
    TrainParams params;
    ScaleMode scale_mode = ScaleMode::MinMax;
    std::optional<labeling::LabelModel> labels;
    std::string config_hash;
};

/// Fits the scaler on the training span, trains on the training partition with
/// the validation partition for early stopping, and embeds scaler, labels,
/// horizon and config hash. Throws EmptyTraining when no row qualifies.
TrainResult train_model(const features::FeatureMatrix& raw, const ModelSpec& spec,
                        const TrainObserver* observer = nullptr);

}  // namespace modeboost

namespace modeboost {

/// Validation RMSE (regression) or 1 - macro-F1 (classification) of `model`
/// on the validation partition of `raw`. Throws EmptyTraining when empty.
double validation_objective(const Ensemble& model, const features::FeatureMatrix& raw);

/// Tuning objective: trains `base` with the suggested parameters, reports the
/// validation objective every 25 rounds for pruning and returns its final value.
tune::Objective gbt_objective(const features::FeatureMatrix& raw, ModelSpec base);

}  // namespace modeboost
