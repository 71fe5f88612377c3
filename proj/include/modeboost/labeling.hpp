#pragma once

#include "modeboost/series.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace modeboost::labeling {

enum class DemandLevel : int { Low = 0, Medium = 1, High = 2 };

enum class PeakScope { PerEntity, Global };
/// Instant: max per-minute value. DailyTotal: max per-day sum.
enum class PeakKind { Instant, DailyTotal };
/// Threshold: bands around 50 on the peak-scaled axis. Quantile: training tertiles.
enum class LabelMode { Threshold, Quantile };

struct LabelConfig {
    double d = 20.0;
    PeakScope peak_scope = PeakScope::PerEntity;
    PeakKind peak_kind = PeakKind::Instant;
    LabelMode mode = LabelMode::Threshold;

    /// Throws InvalidConfig unless 0 < d < 50.
    void validate() const;
};

/// 100 * value / peak, or 0 when the peak is 0.
double scale_to_peak(double value, double peak);

/// Low below 50-d, Medium on [50-d, 50+d), High from 50+d.
DemandLevel demand_level(double scaled, double d);

/// Per-entity statistics fitted on the training span only.
struct LabelModel {
    LabelConfig config;
    std::vector<double> peaks;
    std::vector<std::array<double, 2>> tertiles;

    DemandLevel level(std::size_t entity_code, double value) const;
};

LabelModel fit_labels(const DemandPanel& panel, const SplitIndices& split, const LabelConfig& config);

/// Targets for one entity: values[h][t] = D_{t+H_h}, levels[h][t] its class,
/// for t in [0, length - H_h).
struct EntityTargets {
    std::vector<std::vector<double>> values;
    std::vector<std::vector<int>> levels;
};

/// Throws HorizonExceedsGrid when some H is < 1 or >= grid length.
std::vector<EntityTargets> build_targets(const DemandPanel& panel, const SplitIndices& split,
                                         std::span<const int> horizons, const LabelConfig& config);

std::string_view to_string(PeakScope s);
std::string_view to_string(PeakKind k);
std::string_view to_string(LabelMode m);
PeakScope parse_peak_scope(std::string_view s);
PeakKind parse_peak_kind(std::string_view s);
LabelMode parse_label_mode(std::string_view s);

}  // namespace modeboost::labeling
