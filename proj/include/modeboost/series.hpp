#pragma once

#include "modeboost/timeutil.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace modeboost {

struct EntityId {
    std::string raw_name;
    std::size_t code = 0;

    friend bool operator==(const EntityId&, const EntityId&) = default;
};

/// Regular one-minute grid shared by every series of a panel.
struct TimeGrid {
    MinuteStamp start{};
    std::size_t length = 0;

    MinuteStamp at(std::size_t step) const { return start + std::chrono::minutes(step); }
    std::optional<std::size_t> index_of(MinuteStamp ts) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Demand counts (vehicles) for one entity, one value per grid step.
struct DemandSeries {
    EntityId entity;
    std::vector<double> values;
};

/// Immutable set of per-entity series on one grid. Entity codes are dense and
/// follow sorted raw-name order.
class DemandPanel {
public:
    /// Codes are (re)assigned by sorted name; throws InvalidSpec on duplicate
    /// names, length mismatches, negative or non-finite values, or no entities.
    DemandPanel(TimeGrid grid, std::vector<std::pair<std::string, std::vector<double>>> named_series);

    const TimeGrid& grid() const { return grid_; }
    std::size_t length() const { return grid_.length; }
    std::size_t entity_count() const { return series_.size(); }

    const DemandSeries& series(std::size_t code) const;
    const std::vector<DemandSeries>& all_series() const { return series_; }
    std::optional<std::size_t> find(std::string_view name) const;
    std::vector<std::string> entity_names() const;

    double total() const;

private:
    TimeGrid grid_;
    std::vector<DemandSeries> series_;
};

/// One (entity, instant, count) observation prior to minute flooring.
struct CountRecord {
    std::string entity;
    SecondStamp timestamp{};
    double count = 1.0;
};

struct AggregationOptions {
    /// Fill minutes without observations with the previous observed value
    /// instead of zero. Leading gaps are always zero.
    bool forward_fill = false;
};

/// Floors timestamps to the minute, sums counts per (entity, minute) and fills
/// the span [min, max] of floored instants. Throws EmptyInput.
DemandPanel floor_and_aggregate(std::span<const CountRecord> records, AggregationOptions options = {});

/// Boundaries of the chronological train / validation / test partitions.
/// Steps [0, train_end) train, [train_end, valid_end) validate, rest test.
struct SplitIndices {
    std::size_t train_end = 0;
    std::size_t valid_end = 0;
    std::size_t length = 0;

    friend bool operator==(const SplitIndices&, const SplitIndices&) = default;
};

struct SplitRatios {
    double train = 0.7;
    double valid = 0.2;
    double test = 0.1;
};

/// train_end = floor(train * length), valid_end = floor((train + valid) * length).
/// Throws GridTooShort for length < 10, InvalidConfig for bad ratios.
SplitIndices chronological_split(std::size_t length, SplitRatios ratios = {});
inline SplitIndices chronological_split(const DemandPanel& panel, SplitRatios ratios = {}) {
    return chronological_split(panel.length(), ratios);
}

/// Max of the entity's values over [0, upto). Throws UnknownEntity.
double entity_peak(const DemandPanel& panel, std::size_t entity_code, std::size_t upto);

/// Canonical `entity,timestamp,value` CSV.
void write_panel_csv(const DemandPanel& panel, const std::filesystem::path& path);
DemandPanel read_panel_csv(const std::filesystem::path& path, AggregationOptions options = {});

}  // namespace modeboost
