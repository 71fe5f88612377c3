#pragma once

#include "modeboost/ingest.hpp"
#include "modeboost/labeling.hpp"
#include "modeboost/series.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modeboost::features {

/// Which way the adjusted-demand multiplier runs across quantile levels.
/// Monotone: Low x 1/s, High x s (order preserving). Compress: the reverse.
enum class AdjustDirection { Monotone, Compress };

struct FourierConfig {
    int period = 1440;
    int harmonics = 3;
    /// Fit the coefficients once on the last training period instead of on a
    /// trailing window at every step.
    bool static_fit = false;
};

struct AdjustedConfig {
    int levels = 3;
    double scale = 2.0;
    AdjustDirection direction = AdjustDirection::Monotone;
};

struct FeatureConfig {
    std::vector<int> lag_offsets{1, 5, 15, 60, 1440};
    std::vector<int> rolling_windows{5, 10, 60, 1440};
    std::vector<int> ewma_spans{5, 10, 60, 1440};
    std::vector<int> cv_windows{60, 1440};
    FourierConfig fourier;
    AdjustedConfig adjusted;
    int timezone_offset_minutes = 0;

    bool include_lags = true;
    bool include_rolling = true;
    bool include_ewma = true;
    bool include_adjusted = true;
    bool include_cv = true;
    bool include_fourier = true;
    bool drop_warmup = true;

    /// Throws InvalidConfig on offsets/windows/spans < 1, K < 1, P < 4,
    /// s <= 1, or an even / too small level count.
    void validate() const;

    /// Leading steps per entity without complete history for every enabled
    /// family: max(longest lag, longest rolling or CV window, P).
    std::size_t warmup() const;
};

/// One derived column over a whole series; entries before `warmup` are
/// incomplete (NaN for lags, available-prefix values for windows).
struct Column {
    std::string name;
    std::vector<double> values;
    std::size_t warmup = 0;
};

std::vector<Column> lag_features(std::span<const double> series, std::span<const int> offsets);

/// roll_mean_w and roll_max_w for each window (mean columns first).
std::vector<Column> rolling_features(std::span<const double> series, std::span<const int> windows);

std::vector<Column> ewma_features(std::span<const double> series, std::span<const int> spans);

/// Sample-std coefficient of variation over each window; 0 where the mean is 0.
std::vector<Column> rolling_cv(std::span<const double> series, std::span<const int> windows);

/// Level cut points of one entity's training span.
struct AdjustedQuantiles {
    std::vector<double> cuts;
    bool degenerate = false;
};

AdjustedQuantiles fit_adjusted_quantiles(std::span<const double> training, const AdjustedConfig& config);

/// gamma(level) = s^(level - center), sign flipped for Compress.
double adjusted_multiplier(const AdjustedQuantiles& q, const AdjustedConfig& config, double value);

Column adjusted_demand(std::span<const double> series, const AdjustedQuantiles& q, const AdjustedConfig& config);

struct FourierCoefficients {
    int period = 0;
    std::vector<double> a;
    std::vector<double> b;
};

/// a_k, b_k over the window series[end_step - P, end_step), indexed 1..P.
/// Throws InsufficientHistory when end_step < P or end_step > size.
FourierCoefficients fourier_coefficients(std::span<const double> series, int period, int harmonics,
                                         std::size_t end_step);

/// Sum over k of a_k cos(2 pi k t / P) + b_k sin(2 pi k t / P).
double fourier_reconstruction(const FourierCoefficients& coeffs, double t_in_period);

/// fourier_a{k}, fourier_b{k} for k = 1..K, then fourier_recon. Rolling mode
/// uses a trailing causal window; static mode fits once on the window ending
/// at `train_end` and phases the reconstruction from there.
std::vector<Column> fourier_features(std::span<const double> series, const FourierConfig& config,
                                     std::size_t train_end);

/// minute_of_hour, hour_of_day, day_of_week, month_of_year, quarter_of_year,
/// is_holiday_period, evaluated in local time (grid time + offset).
std::vector<Column> calendar_features(const TimeGrid& grid, int timezone_offset_minutes,
                                      const ingest::HolidayCalendar& holidays);

/// Columns passed through the scaler untouched.
bool is_categorical(std::string_view feature_name);

enum class Partition { Train, Valid, Test };

/// Row-per-(entity, step) features plus per-horizon targets.
struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<std::string> entity_names;
    std::vector<int> horizons;
    SplitIndices split;
    MinuteStamp grid_start{};
    bool scaled = false;

    std::size_t rows = 0;
    std::vector<double> values;               // rows x features, row-major
    std::vector<std::uint32_t> entity;        // per row
    std::vector<std::uint32_t> step;          // per row
    std::vector<std::vector<double>> target_values;  // [horizon][row]
    std::vector<std::vector<int>> target_levels;     // [horizon][row]

    std::size_t feature_count() const { return feature_names.size(); }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * feature_names.size(), feature_names.size()};
    }
    std::span<double> row(std::size_t r) { return {values.data() + r * feature_names.size(), feature_names.size()}; }
    double at(std::size_t r, std::size_t f) const { return values[r * feature_names.size() + f]; }

    /// Throws FeatureMismatch for an unknown name.
    std::size_t feature_index(std::string_view name) const;
    /// Throws HorizonExceedsGrid for a horizon that was not assembled.
    std::size_t horizon_index(int horizon) const;
};

/// Rows whose origin and target both lie in the partition: train needs
/// step + H < train_end, validation train_end <= step and step + H < valid_end,
/// test step >= valid_end.
std::vector<std::size_t> partition_rows(const FeatureMatrix& m, Partition p, int horizon);

/// Rows of `m` restricted to `rows` (targets follow).
FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows);

struct AssembleOptions {
    std::size_t jobs = 1;
};

/// Per-entity features (statistics fitted on the training span only), joined
/// in (entity_code, step) order. Throws NoUsableRows.
FeatureMatrix assemble_matrix(const DemandPanel& panel, const FeatureConfig& config, std::span<const int> horizons,
                              const labeling::LabelConfig& label_config, const SplitIndices& split,
                              const ingest::HolidayCalendar& holidays = {}, AssembleOptions options = {});

/// Binary layout (all little-endian): magic "MBFM1", u16 version, u8 scaled,
/// i64 grid start (minutes since epoch), u64 train_end, valid_end, length,
/// string lists (u32 count, then u32 length + bytes) for feature and entity
/// names, u32 horizon count + i32 horizons, u64 rows, then per row f64 values
/// [step, features..., target value per horizon..., target level per horizon...].
void write_matrix_binary(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_matrix_binary(const std::filesystem::path& path);

/// CSV with `# key=value` metadata lines, header
/// `step,<features>,target_h<H>...,level_h<H>...`.
void write_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);

/// Dispatches on extension: `.csv` is CSV, anything else binary.
void write_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_matrix(const std::filesystem::path& path);

}  // namespace modeboost::features
