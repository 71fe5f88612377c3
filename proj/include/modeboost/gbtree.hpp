#pragma once

#include "modeboost/labeling.hpp"
#include "modeboost/postprocess.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modeboost {

enum class Task : std::uint8_t { Regression = 0, Classification = 1 };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

struct TrainParams {
    Task task = Task::Regression;
    int num_classes = 3;
    int num_rounds = 300;
    double learning_rate = 0.1;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double lambda = 1.0;
    double gamma = 0.0;
    double subsample = 0.8;
    double colsample = 0.8;
    int num_bins = 64;
    /// Candidate thresholds at every distinct training value instead of bins.
    bool exact_greedy = false;
    std::uint64_t seed = 0;
    /// 0 disables; otherwise stop after this many rounds without improvement
    /// of the validation loss and keep the best prefix.
    int early_stopping_rounds = 0;
    std::optional<double> base_score;
    std::size_t jobs = 1;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Internal when feature >= 0: rows with x < threshold go left; NaN follows
/// default_left. Leaf otherwise, carrying the already shrunk weight.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double weight = 0.0;
    double gain = 0.0;
    double cover = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
};

/// Fitted forecaster for one (horizon, task). Trees are stored round-major:
/// tree r * classes + k belongs to class k in round r.
struct Ensemble {
    static constexpr std::uint16_t kFormatVersion = 1;

    Task task = Task::Regression;
    int num_classes = 1;
    int horizon = 0;
    double learning_rate = 0.1;
    std::vector<double> base_scores;
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;
    std::optional<Scaler> scaler;
    std::optional<labeling::LabelModel> labels;
    std::string config_hash;

    int classes_per_round() const { return task == Task::Classification ? num_classes : 1; }
    std::size_t rounds() const { return trees.size() / static_cast<std::size_t>(classes_per_round()); }
    std::size_t node_count() const;

    /// Raw margins for one row already in model (scaled) space.
    void margins(std::span<const double> x, std::span<double> out) const;

    /// One row in raw feature space; the embedded scaler is applied first.
    double predict_row(std::span<const double> raw) const;
    std::vector<double> predict_proba_row(std::span<const double> raw) const;

    /// Regression values or class indices (as doubles) for every row. Applies
    /// the scaler unless the matrix is already scaled. Throws FeatureMismatch.
    std::vector<double> predict(const features::FeatureMatrix& m, std::size_t jobs = 1) const;
    /// Row-major rows x classes. Throws WrongTask for regression models.
    std::vector<double> predict_proba(const features::FeatureMatrix& m, std::size_t jobs = 1) const;

    /// Row-major raw rows in feature_names() order.
    std::vector<double> predict_rows(std::span<const double> raw_rows, std::size_t jobs = 1) const;

    void check_features(std::span<const std::string> names) const;
};

/// Total split gain per feature; features never split on report 0.
std::map<std::string, double> feature_importance(const Ensemble& e);

/// Row-major view of a dense design matrix.
struct DataView {
    std::span<const double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const double> row(std::size_t r) const { return values.subspan(r * cols, cols); }
};

struct ValidationSet {
    DataView x;
    std::span<const double> y;
};

struct RoundRecord {
    int round = 0;
    double train_loss = 0.0;
    /// Validation loss (RMSE or multiclass log-loss) when a set is given.
    double valid_loss = 0.0;
};

/// Called every `every` rounds with the validation objective (RMSE, or
/// 1 - macro-F1 for classification). Returning true stops training.
struct TrainObserver {
    int every = 25;
    std::function<bool(int round, double objective)> on_report;
};

struct TrainResult {
    Ensemble model;
    std::vector<RoundRecord> history;
    int best_round = 0;
    bool stopped_by_observer = false;
};

/// Newton boosting with L2-regularised leaves. `y` holds regression targets or
/// class indices. Throws EmptyMatrix, LabelOutOfRange, NonFiniteFeature,
/// FeatureMismatch (name count).
TrainResult fit(const DataView& x, std::span<const std::string> feature_names, std::span<const double> y,
                const TrainParams& params, const ValidationSet* valid = nullptr,
                const TrainObserver* observer = nullptr);

/// Analytic in-memory size of the nodes plus metadata.
std::size_t estimated_resident_bytes(const Ensemble& e);

/// Binary layout documented in the README. Throws IoFailure.
std::string serialize(const Ensemble& e);
/// Throws CorruptFile, VersionMismatch.
Ensemble deserialize(std::string_view bytes);
void save(const Ensemble& e, const std::filesystem::path& path);
Ensemble load(const std::filesystem::path& path);

/// Inspection format; doubles are rendered with round-trip precision.
std::string to_json(const Ensemble& e);
Ensemble from_json(std::string_view text);

}  // namespace modeboost
