#include "modeboost/baselines.hpp"

#include "modeboost/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace modeboost::baselines {

std::string_view to_string(Kind k) {
    switch (k) {
        case Kind::HistoricalAverage: return "ha";
        case Kind::SeasonalNaive: return "snaive";
        case Kind::SES: return "ses";
        case Kind::Croston: return "croston";
    }
    return "?";
}

Kind parse_kind(std::string_view s) {
    if (s == "ha") return Kind::HistoricalAverage;
    if (s == "snaive") return Kind::SeasonalNaive;
    if (s == "ses") return Kind::SES;
    if (s == "croston") return Kind::Croston;
    throw Error(ErrorCode::InvalidConfig, "unknown baseline '" + std::string(s) + "'");
}

void BaselineConfig::validate() const {
    if (period < 1) throw Error(ErrorCode::InvalidConfig, "seasonal period must be >= 1");
    if (ses_alpha && !(*ses_alpha > 0.0 && *ses_alpha <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "SES alpha must lie in (0, 1]");
    if (!(croston_alpha > 0.0 && croston_alpha <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "Croston alpha must lie in (0, 1]");
}

std::string BaselineConfig::describe() const {
    std::ostringstream out;
    out << "ha=" << (ha_global_mean ? "global_mean" : "slot(dow,minute)") << " snaive.period=" << period
        << " ses.alpha=";
    if (ses_alpha) {
        out << *ses_alpha;
    } else {
        out << "grid(0.05..0.95)";
    }
    out << " croston.alpha=" << croston_alpha;
    return out.str();
}

HistoricalAverage::HistoricalAverage(std::span<const double> series, const TimeGrid& grid, std::size_t train_end,
                                     int timezone_offset_minutes, bool global_mean_only)
    : grid_(grid), offset_(timezone_offset_minutes), global_only_(global_mean_only), sums_(kSlots, 0.0),
      counts_(kSlots, 0) {
    train_end = std::min(train_end, series.size());
    if (train_end == 0) throw Error(ErrorCode::EmptyTraining, "historical average needs training values");
    long double total = 0.0L;
    for (std::size_t t = 0; t < train_end; ++t) {
        total += series[t];
        const std::size_t slot = slot_of(grid_, t, offset_);
        sums_[slot] += series[t];
        ++counts_[slot];
    }
    global_ = static_cast<double>(total / train_end);
}

std::size_t HistoricalAverage::slot_of(const TimeGrid& grid, std::size_t step, int timezone_offset_minutes) {
    const auto local = grid.at(step) + std::chrono::minutes(timezone_offset_minutes);
    const auto day = std::chrono::floor<std::chrono::days>(local);
    const auto dow = std::chrono::weekday(day).iso_encoding() - 1;  // Monday = 0
    const auto minute = static_cast<std::size_t>((local - day).count());
    return dow * 1440 + minute;
}

double HistoricalAverage::forecast(std::size_t target_step) const {
    if (global_only_) return global_;
    const std::size_t slot = slot_of(grid_, target_step, offset_);
    return counts_[slot] ? sums_[slot] / static_cast<double>(counts_[slot]) : global_;
}

double seasonal_naive(std::span<const double> series, std::size_t t, int horizon, int period) {
    const auto target = static_cast<long long>(t) + horizon;
    if (horizon < 1 || target >= static_cast<long long>(series.size())) {
        throw Error(ErrorCode::HorizonExceedsGrid, "target step lies outside the series");
    }
    const long long src = target - period;
    if (src < 0) throw Error(ErrorCode::InsufficientHistory, "seasonal naive needs one full period of history");
    return series[static_cast<std::size_t>(src)];
}

double ses_sse(std::span<const double> training, double alpha) {
    if (training.empty()) return 0.0;
    double level = training[0];
    long double sse = 0.0L;
    for (std::size_t t = 1; t < training.size(); ++t) {
        const double e = training[t] - level;
        sse += static_cast<long double>(e) * e;
        level = alpha * training[t] + (1.0 - alpha) * level;
    }
    return static_cast<double>(sse);
}

double select_ses_alpha(std::span<const double> training) {
    if (training.size() < 2) throw Error(ErrorCode::InsufficientHistory, "SES needs at least 2 training values");
    double best_alpha = 0.05;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 19; ++i) {
        const double alpha = 0.05 * i;
        const double sse = ses_sse(training, alpha);
        if (sse < best) {
            best = sse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

std::vector<double> ses_levels(std::span<const double> series, double alpha) {
    std::vector<double> levels(series.size());
    if (series.empty()) return levels;
    double level = series[0];
    levels[0] = level;
    for (std::size_t t = 1; t < series.size(); ++t) {
        level = alpha * series[t] + (1.0 - alpha) * level;
        levels[t] = level;
    }
    return levels;
}

std::vector<double> croston_forecasts(std::span<const double> series, double alpha, std::size_t train_end) {
    bool any = false;
    for (std::size_t t = 0; t < std::min(train_end, series.size()); ++t) any = any || series[t] > 0.0;
    if (!any) throw Error(ErrorCode::AllZeroTraining, "Croston needs a nonzero training value");

    std::vector<double> out(series.size(), std::numeric_limits<double>::quiet_NaN());
    CrostonState s;
    bool started = false;
    std::size_t last = 0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series[t] > 0.0) {
            if (!started) {
                s.z = series[t];
                s.p = static_cast<double>(t + 1);
                started = true;
            } else {
                const auto q = static_cast<double>(t - last);
                s.z = alpha * series[t] + (1.0 - alpha) * s.z;
                s.p = alpha * q + (1.0 - alpha) * s.p;
            }
            last = t;
        }
        if (started) out[t] = s.forecast();
    }
    return out;
}

std::optional<CrostonState> croston_state(std::span<const double> series, double alpha, std::size_t upto) {
    std::optional<CrostonState> s;
    std::size_t last = 0;
    for (std::size_t t = 0; t < std::min(upto, series.size()); ++t) {
        if (series[t] <= 0.0) continue;
        if (!s) {
            s = CrostonState{series[t], static_cast<double>(t + 1)};
        } else {
            s->z = alpha * series[t] + (1.0 - alpha) * s->z;
            s->p = alpha * static_cast<double>(t - last) + (1.0 - alpha) * s->p;
        }
        last = t;
    }
    return s;
}

std::vector<double> forecast(Kind kind, const BaselineConfig& config, std::span<const double> series,
                             const TimeGrid& grid, const SplitIndices& split, std::span<const std::size_t> origins,
                             int horizon) {
    config.validate();
    std::vector<double> out;
    out.reserve(origins.size());
    switch (kind) {
        case Kind::HistoricalAverage: {
            const HistoricalAverage ha(series, grid, split.train_end, config.timezone_offset_minutes,
                                       config.ha_global_mean);
            for (std::size_t t : origins) out.push_back(ha.forecast(t + static_cast<std::size_t>(horizon)));
            break;
        }
        case Kind::SeasonalNaive:
            for (std::size_t t : origins) out.push_back(seasonal_naive(series, t, horizon, config.period));
            break;
        case Kind::SES: {
            const double alpha = config.ses_alpha ? *config.ses_alpha
                                                  : select_ses_alpha(series.first(std::min(split.train_end, series.size())));
            const auto levels = ses_levels(series, alpha);
            for (std::size_t t : origins) out.push_back(levels.at(t));
            break;
        }
        case Kind::Croston: {
            const auto f = croston_forecasts(series, config.croston_alpha, split.train_end);
            for (std::size_t t : origins) out.push_back(f.at(t));
            break;
        }
    }
    return out;
}

}  // namespace modeboost::baselines
