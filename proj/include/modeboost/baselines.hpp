#pragma once

#include "modeboost/series.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modeboost::baselines {

enum class Kind { HistoricalAverage, SeasonalNaive, SES, Croston };

std::string_view to_string(Kind k);
/// Accepts the CLI spellings ha, snaive, ses, croston.
Kind parse_kind(std::string_view s);

struct BaselineConfig {
    int period = 1440;
    /// Chosen by grid search on the training span when absent.
    std::optional<double> ses_alpha;
    double croston_alpha = 0.1;
    /// Historical average over the whole training span instead of per slot.
    bool ha_global_mean = false;
    int timezone_offset_minutes = 0;

    /// Throws InvalidConfig unless alphas lie in (0, 1] and period >= 1.
    void validate() const;
    std::string describe() const;
};

/// Mean training demand per (day-of-week, minute-of-day) slot.
class HistoricalAverage {
public:
    static constexpr std::size_t kSlots = 7 * 1440;

    /// Throws EmptyTraining when split.train_end is 0.
    HistoricalAverage(std::span<const double> series, const TimeGrid& grid, std::size_t train_end,
                      int timezone_offset_minutes = 0, bool global_mean_only = false);

    /// Slot mean of the target step, or the global training mean for an empty slot.
    double forecast(std::size_t target_step) const;
    double global_mean() const { return global_; }
    static std::size_t slot_of(const TimeGrid& grid, std::size_t step, int timezone_offset_minutes);

private:
    TimeGrid grid_;
    int offset_ = 0;
    bool global_only_ = false;
    double global_ = 0.0;
    std::vector<double> sums_;
    std::vector<std::size_t> counts_;
};

/// D[t + H - period]. Throws InsufficientHistory when that index is negative
/// and HorizonExceedsGrid when t + H is off the series.
double seasonal_naive(std::span<const double> series, std::size_t t, int horizon, int period = 1440);

/// One-step-ahead SSE of SES over `training` with the level initialised to
/// the first value.
double ses_sse(std::span<const double> training, double alpha);

/// Alpha in {0.05, 0.10, ..., 0.95} with the smallest training SSE (first wins
/// ties). Throws InsufficientHistory for fewer than 2 values.
double select_ses_alpha(std::span<const double> training);

/// Levels l_t after observing D_0..D_t; the flat forecast from origin t is l_t.
std::vector<double> ses_levels(std::span<const double> series, double alpha);

/// z_t / p_t after observing D_0..D_t. Origins before the first nonzero value
/// get NaN. Throws AllZeroTraining when D_0..D_{train_end-1} has no demand.
std::vector<double> croston_forecasts(std::span<const double> series, double alpha, std::size_t train_end);

struct CrostonState {
    double z = 0.0;
    double p = 0.0;
    double forecast() const { return z / p; }
};

/// State after the first `upto` values, or nullopt when none is nonzero.
std::optional<CrostonState> croston_state(std::span<const double> series, double alpha, std::size_t upto);

/// Forecasts of D[t + H] for every origin t in `origins`. All methods are
/// causal: the forecast from origin t reads D_0..D_t only (the historical
/// average reads the training span, which precedes every test origin).
std::vector<double> forecast(Kind kind, const BaselineConfig& config, std::span<const double> series,
                             const TimeGrid& grid, const SplitIndices& split, std::span<const std::size_t> origins,
                             int horizon);

}  // namespace modeboost::baselines
