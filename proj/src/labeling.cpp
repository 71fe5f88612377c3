#include "modeboost/labeling.hpp"

#include "modeboost/error.hpp"
#include "modeboost/numeric.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace modeboost::labeling {

void LabelConfig::validate() const {
    if (!(d > 0.0 && d < 50.0)) throw Error(ErrorCode::InvalidConfig, "label tolerance d must lie in (0, 50)");
}

double scale_to_peak(double value, double peak) {
    if (peak <= 0.0) return 0.0;
    return 100.0 * value / peak;
}

DemandLevel demand_level(double scaled, double d) {
    if (scaled < 50.0 - d) return DemandLevel::Low;
    if (scaled < 50.0 + d) return DemandLevel::Medium;
    return DemandLevel::High;
}

namespace {

double daily_total_peak(const DemandPanel& panel, std::size_t code, std::size_t upto) {
    const auto& values = panel.series(code).values;
    const auto start = panel.grid().start;
    const auto first_day = std::chrono::floor<std::chrono::days>(start);
    const auto offset = static_cast<std::size_t>((start - first_day).count());
    std::map<std::size_t, double> totals;
    for (std::size_t t = 0; t < upto; ++t) totals[(t + offset) / 1440] += values[t];
    double best = 0.0;
    for (const auto& [day, sum] : totals) best = std::max(best, sum);
    return best;
}

}  // namespace

LabelModel fit_labels(const DemandPanel& panel, const SplitIndices& split, const LabelConfig& config) {
    config.validate();
    const std::size_t upto = split.train_end;
    LabelModel model;
    model.config = config;
    model.peaks.resize(panel.entity_count());
    model.tertiles.resize(panel.entity_count());
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        model.peaks[e] = config.peak_kind == PeakKind::Instant ? entity_peak(panel, e, upto)
                                                               : daily_total_peak(panel, e, upto);
        const auto& values = panel.series(e).values;
        const auto cuts = equal_frequency_cuts(std::span(values.data(), upto), 3);
        model.tertiles[e] = {cuts[0], cuts[1]};
    }
    if (config.peak_scope == PeakScope::Global) {
        const double global = *std::max_element(model.peaks.begin(), model.peaks.end());
        std::fill(model.peaks.begin(), model.peaks.end(), global);
    }
    return model;
}

DemandLevel LabelModel::level(std::size_t entity_code, double value) const {
    if (config.mode == LabelMode::Quantile) {
        const auto& cuts = tertiles.at(entity_code);
        if (value < cuts[0]) return DemandLevel::Low;
        if (value < cuts[1]) return DemandLevel::Medium;
        return DemandLevel::High;
    }
    return demand_level(scale_to_peak(value, peaks.at(entity_code)), config.d);
}

std::vector<EntityTargets> build_targets(const DemandPanel& panel, const SplitIndices& split,
                                         std::span<const int> horizons, const LabelConfig& config) {
    for (int h : horizons) {
        if (h < 1 || static_cast<std::size_t>(h) >= panel.length()) {
            throw Error(ErrorCode::HorizonExceedsGrid,
                        "horizon " + std::to_string(h) + " vs grid length " + std::to_string(panel.length()));
        }
    }
    const LabelModel model = fit_labels(panel, split, config);
    std::vector<EntityTargets> out(panel.entity_count());
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        const auto& values = panel.series(e).values;
        for (int h : horizons) {
            const std::size_t n = values.size() - static_cast<std::size_t>(h);
            std::vector<double> v(values.begin() + h, values.end());
            std::vector<int> lv(n);
            for (std::size_t t = 0; t < n; ++t) lv[t] = static_cast<int>(model.level(e, v[t]));
            out[e].values.push_back(std::move(v));
            out[e].levels.push_back(std::move(lv));
        }
    }
    return out;
}

std::string_view to_string(PeakScope s) { return s == PeakScope::PerEntity ? "per_entity" : "global"; }
std::string_view to_string(PeakKind k) { return k == PeakKind::Instant ? "instant" : "daily_total"; }
std::string_view to_string(LabelMode m) { return m == LabelMode::Threshold ? "threshold" : "quantile"; }

PeakScope parse_peak_scope(std::string_view s) {
    if (s == "per_entity") return PeakScope::PerEntity;
    if (s == "global") return PeakScope::Global;
    throw Error(ErrorCode::InvalidConfig, "peak_scope must be per_entity|global, got '" + std::string(s) + "'");
}

PeakKind parse_peak_kind(std::string_view s) {
    if (s == "instant") return PeakKind::Instant;
    if (s == "daily_total") return PeakKind::DailyTotal;
    throw Error(ErrorCode::InvalidConfig, "peak_kind must be instant|daily_total, got '" + std::string(s) + "'");
}

LabelMode parse_label_mode(std::string_view s) {
    if (s == "threshold") return LabelMode::Threshold;
    if (s == "quantile") return LabelMode::Quantile;
    throw Error(ErrorCode::InvalidConfig, "label mode must be threshold|quantile, got '" + std::string(s) + "'");
}

}  // namespace modeboost::labeling
