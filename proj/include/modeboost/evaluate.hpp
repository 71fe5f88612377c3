#pragma once

#include "modeboost/baselines.hpp"
#include "modeboost/features.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/metrics.hpp"
#include "modeboost/postprocess.hpp"
#include "modeboost/significance.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace modeboost {

inline constexpr std::string_view kAllEntities = "ALL";

struct MetricRow {
    std::string entity;
    int horizon = 0;
    std::string model;
    std::string metric;
    double value = 0.0;
};

struct SignificanceRow {
    std::string model_a;
    std::string model_b;
    TestResult result;
};

struct EvalReport {
    std::vector<MetricRow> rows;
    std::vector<SignificanceRow> tests;
    SplitIndices split;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;

    /// Value of one cell; throws InvalidSpec when absent.
    double value(std::string_view entity, int horizon, std::string_view model, std::string_view metric) const;
};

/// Trained forecasters keyed by horizon; either map may be empty.
struct ForecastModels {
    std::string name = "modeboost";
    std::map<int, const Ensemble*> regression;
    std::map<int, const Ensemble*> classification;
};

struct EvalOptions {
    std::vector<baselines::Kind> baselines{baselines::Kind::HistoricalAverage, baselines::Kind::SeasonalNaive,
                                           baselines::Kind::SES, baselines::Kind::Croston};
    baselines::BaselineConfig baseline_config;
    /// Pairs compared with both tests; empty compares the forecaster with
    /// every baseline.
    std::vector<std::pair<std::string, std::string>> comparisons;
    F1Average f1_average = F1Average::Macro;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

/// Per-entity and pooled (entity "ALL") test-partition metrics per horizon
/// and model, plus paired tests on per-timestamp absolute errors pooled over
/// entities and horizons. Throws NoTestRows.
EvalReport run_evaluation(const DemandPanel& panel, const features::FeatureMatrix& matrix,
                          const ForecastModels& models, std::span<const int> horizons, const EvalOptions& options);

/// `entity,horizon,model,metric,value` with `# key=value` header lines.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
/// `model_a,model_b,method,statistic,p_value,n`.
void write_significance_csv(const EvalReport& report, const std::filesystem::path& path);
/// Heatmap-ready `entity,date,total` daily demand totals.
void write_plot_data(const DemandPanel& panel, const std::filesystem::path& path, const std::string& config_hash);

struct GlobalLocalRow {
    std::string entity;
    int horizon = 0;
    double pooled_mae = 0.0;
    double pooled_rmse = 0.0;
    double local_mae = 0.0;
    double local_rmse = 0.0;
};

struct GlobalLocalReport {
    std::vector<GlobalLocalRow> rows;
    std::size_t pooled_models = 0;
    std::size_t local_models = 0;
    double pooled_train_seconds = 0.0;
    double local_train_seconds = 0.0;
    std::size_t pooled_bytes = 0;
    std::size_t local_bytes = 0;
};

/// One pooled regression model and one per-entity model per horizon with
/// identical parameters, scored on the test partition. Throws SingleEntity.
GlobalLocalReport global_vs_local(const features::FeatureMatrix& matrix, const TrainParams& params,
                                  std::span<const int> horizons, ScaleMode scale_mode = ScaleMode::MinMax);

void write_global_local_csv(const GlobalLocalReport& report, const std::filesystem::path& path,
                            const std::string& config_hash);

}  // namespace modeboost
