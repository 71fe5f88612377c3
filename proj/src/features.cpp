#include "modeboost/features.hpp"

#include "modeboost/error.hpp"
#include "modeboost/numeric.hpp"
#include "modeboost/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

namespace modeboost::features {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_positive(std::span<const int> xs, const char* what) {
    for (int x : xs) {
        if (x < 1) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be >= 1");
    }
}

int max_of(std::span<const int> xs) { return xs.empty() ? 0 : *std::max_element(xs.begin(), xs.end()); }

constexpr std::array<std::string_view, 7> kCategorical{
    "entity_code", "minute_of_hour", "hour_of_day", "day_of_week", "month_of_year", "quarter_of_year",
    "is_holiday_period"};

}  // namespace

void FeatureConfig::validate() const {
    require_positive(lag_offsets, "lag offsets");
    require_positive(rolling_windows, "rolling windows");
    require_positive(ewma_spans, "ewma spans");
    require_positive(cv_windows, "cv windows");
    if (fourier.harmonics < 1) throw Error(ErrorCode::InvalidConfig, "fourier harmonics K must be >= 1");
    if (fourier.period < 4) throw Error(ErrorCode::InvalidConfig, "fourier period P must be >= 4");
    if (!(adjusted.scale > 1.0)) throw Error(ErrorCode::InvalidConfig, "adjusted scale s must be > 1");
    if (adjusted.levels < 3 || adjusted.levels % 2 == 0)
        throw Error(ErrorCode::InvalidConfig, "adjusted levels L must be odd and >= 3");
}

std::size_t FeatureConfig::warmup() const {
    int w = 0;
    if (include_lags) w = std::max(w, max_of(lag_offsets));
    if (include_rolling) w = std::max(w, max_of(rolling_windows));
    if (include_cv) w = std::max(w, max_of(cv_windows));
    if (include_fourier && !fourier.static_fit) w = std::max(w, fourier.period);
    return static_cast<std::size_t>(w);
}

std::vector<Column> lag_features(std::span<const double> series, std::span<const int> offsets) {
    require_positive(offsets, "lag offsets");
    std::vector<Column> cols;
    for (int tau : offsets) {
        Column c{"lag_" + std::to_string(tau), std::vector<double>(series.size(), kNaN),
                 static_cast<std::size_t>(tau)};
        for (std::size_t t = static_cast<std::size_t>(tau); t < series.size(); ++t) c.values[t] = series[t - tau];
        cols.push_back(std::move(c));
    }
    return cols;
}

std::vector<Column> rolling_features(std::span<const double> series, std::span<const int> windows) {
    require_positive(windows, "rolling windows");
    std::vector<Column> means, maxes;
    const std::size_t n = series.size();
    for (int wi : windows) {
        const auto w = static_cast<std::size_t>(wi);
        Column mean{"roll_mean_" + std::to_string(wi), std::vector<double>(n), w};
        Column mx{"roll_max_" + std::to_string(wi), std::vector<double>(n), w};
        long double sum = 0.0L;
        std::deque<std::size_t> window_max;  // indices with decreasing values
        for (std::size_t t = 0; t < n; ++t) {
            sum += series[t];
            if (t >= w) sum -= series[t - w];
            const std::size_t count = std::min(w, t + 1);
            mean.values[t] = static_cast<double>(sum / static_cast<long double>(count));

            while (!window_max.empty() && series[window_max.back()] <= series[t]) window_max.pop_back();
            window_max.push_back(t);
            if (window_max.front() + w <= t) window_max.pop_front();
            mx.values[t] = series[window_max.front()];
        }
        means.push_back(std::move(mean));
        maxes.push_back(std::move(mx));
    }
    for (auto& c : maxes) means.push_back(std::move(c));
    return means;
}

std::vector<Column> ewma_features(std::span<const double> series, std::span<const int> spans) {
    require_positive(spans, "ewma spans");
    std::vector<Column> cols;
    for (int span : spans) {
        const double alpha = 2.0 / (static_cast<double>(span) + 1.0);
        Column c{"ewma_" + std::to_string(span), std::vector<double>(series.size()), 0};
        for (std::size_t t = 0; t < series.size(); ++t) {
            c.values[t] = t == 0 ? series[0] : alpha * series[t] + (1.0 - alpha) * c.values[t - 1];
        }
        cols.push_back(std::move(c));
    }
    return cols;
}

std::vector<Column> rolling_cv(std::span<const double> series, std::span<const int> windows) {
    require_positive(windows, "cv windows");
    std::vector<Column> cols;
    const std::size_t n = series.size();
    for (int wi : windows) {
        const auto w = static_cast<std::size_t>(wi);
        Column c{"cv_" + std::to_string(wi), std::vector<double>(n), w};
        long double sum = 0.0L, sumsq = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const long double x = series[t];
            sum += x;
            sumsq += x * x;
            if (t >= w) {
                const long double old = series[t - w];
                sum -= old;
                sumsq -= old * old;
            }
            const std::size_t count = std::min(w, t + 1);
            const long double mean = sum / static_cast<long double>(count);
            if (count < 2 || mean <= 0.0L) {
                c.values[t] = 0.0;
                continue;
            }
            const long double var =
                std::max(0.0L, (sumsq - sum * sum / static_cast<long double>(count)) / static_cast<long double>(count - 1));
            c.values[t] = static_cast<double>(std::sqrt(var) / mean);
        }
        cols.push_back(std::move(c));
    }
    return cols;
}

AdjustedQuantiles fit_adjusted_quantiles(std::span<const double> training, const AdjustedConfig& config) {
    AdjustedQuantiles q;
    if (training.empty()) {
        q.degenerate = true;
        return q;
    }
    const auto [lo, hi] = std::minmax_element(training.begin(), training.end());
    if (*lo == *hi) {
        q.degenerate = true;
        return q;
    }
    q.cuts = equal_frequency_cuts(training, config.levels);
    return q;
}

double adjusted_multiplier(const AdjustedQuantiles& q, const AdjustedConfig& config, double value) {
    if (q.degenerate) return 1.0;
    const int level = level_of(q.cuts, value);
    const int center = (config.levels - 1) / 2;
    const int exponent = config.direction == AdjustDirection::Monotone ? level - center : center - level;
    return std::pow(config.scale, exponent);
}

Column adjusted_demand(std::span<const double> series, const AdjustedQuantiles& q, const AdjustedConfig& config) {
    Column c{"adjusted_demand", std::vector<double>(series.size()), 0};
    for (std::size_t t = 0; t < series.size(); ++t) c.values[t] = adjusted_multiplier(q, config, series[t]) * series[t];
    return c;
}

FourierCoefficients fourier_coefficients(std::span<const double> series, int period, int harmonics,
                                         std::size_t end_step) {
    const auto p = static_cast<std::size_t>(period);
    if (period < 1 || end_step < p || end_step > series.size()) {
        throw Error(ErrorCode::InsufficientHistory, "fourier window of length " + std::to_string(period) +
                                                        " does not fit before step " + std::to_string(end_step));
    }
    FourierCoefficients c{period, std::vector<double>(harmonics, 0.0), std::vector<double>(harmonics, 0.0)};
    const std::size_t begin = end_step - p;
    for (int k = 1; k <= harmonics; ++k) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 1; j <= p; ++j) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / period * k;
            a += series[begin + j - 1] * std::cos(theta);
            b += series[begin + j - 1] * std::sin(theta);
        }
        c.a[k - 1] = 2.0 / period * a;
        c.b[k - 1] = 2.0 / period * b;
    }
    return c;
}

double fourier_reconstruction(const FourierCoefficients& coeffs, double t_in_period) {
    double sum = 0.0;
    for (std::size_t i = 0; i < coeffs.a.size(); ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i + 1) / coeffs.period * t_in_period;
        sum += coeffs.a[i] * std::cos(theta) + coeffs.b[i] * std::sin(theta);
    }
    return sum;
}

std::vector<Column> fourier_features(std::span<const double> series, const FourierConfig& config,
                                     std::size_t train_end) {
    const int K = config.harmonics;
    const auto P = static_cast<std::size_t>(config.period);
    const std::size_t n = series.size();
    std::vector<Column> cols;
    for (int k = 1; k <= K; ++k) cols.push_back(Column{"fourier_a" + std::to_string(k), std::vector<double>(n, kNaN), P});
    for (int k = 1; k <= K; ++k) cols.push_back(Column{"fourier_b" + std::to_string(k), std::vector<double>(n, kNaN), P});
    cols.push_back(Column{"fourier_recon", std::vector<double>(n, kNaN), P});

    if (config.static_fit) {
        const auto coeffs = fourier_coefficients(series, config.period, K, train_end);
        const std::size_t origin = train_end - P;  // window index 1 sits at this step
        for (auto& c : cols) c.warmup = 0;
        for (std::size_t t = 0; t < n; ++t) {
            for (int k = 0; k < K; ++k) {
                cols[k].values[t] = coeffs.a[k];
                cols[K + k].values[t] = coeffs.b[k];
            }
            const std::size_t phase = ((t + P - origin % P) % P) + 1;
            cols[2 * K].values[t] = fourier_reconstruction(coeffs, static_cast<double>(phase));
        }
        return cols;
    }

    if (n < P) return cols;
    // Sliding DFT: S_k(t+1) = e^{-i theta k} S_k(t) + D_{t+1} - D_{t+1-P}, where
    // S_k(t) = sum_j D_{t-P+j} e^{i theta j k}. Re-summed exactly once per period
    // so rounding drift stays bounded.
    std::vector<double> re(K), im(K), rot_re(K), rot_im(K);
    for (int k = 0; k < K; ++k) {
        const double theta = 2.0 * std::numbers::pi * (k + 1) / static_cast<double>(P);
        rot_re[k] = std::cos(theta);
        rot_im[k] = -std::sin(theta);
    }
    const double norm = 2.0 / static_cast<double>(P);
    for (std::size_t end = P; end <= n; ++end) {
        const std::size_t t = end - 1;
        if ((end - P) % P == 0) {
            const auto exact = fourier_coefficients(series, config.period, K, end);
            for (int k = 0; k < K; ++k) {
                re[k] = exact.a[k] / norm;
                im[k] = exact.b[k] / norm;
            }
        } else {
            const double delta = series[t] - series[t - P];
            for (int k = 0; k < K; ++k) {
                const double r = re[k] * rot_re[k] - im[k] * rot_im[k];
                const double i = re[k] * rot_im[k] + im[k] * rot_re[k];
                re[k] = r + delta;
                im[k] = i;
            }
        }
        FourierCoefficients c{config.period, std::vector<double>(K), std::vector<double>(K)};
        for (int k = 0; k < K; ++k) {
            c.a[k] = norm * re[k];
            c.b[k] = norm * im[k];
            cols[k].values[t] = c.a[k];
            cols[K + k].values[t] = c.b[k];
        }
        cols[2 * K].values[t] = fourier_reconstruction(c, static_cast<double>(P));
    }
    return cols;
}

std::vector<Column> calendar_features(const TimeGrid& grid, int timezone_offset_minutes,
                                      const ingest::HolidayCalendar& holidays) {
    const std::size_t n = grid.length;
    std::vector<Column> cols;
    for (const char* name :
         {"minute_of_hour", "hour_of_day", "day_of_week", "month_of_year", "quarter_of_year", "is_holiday_period"}) {
        cols.push_back(Column{name, std::vector<double>(n), 0});
    }
    for (std::size_t t = 0; t < n; ++t) {
        const auto f = calendar_fields(grid.at(t), timezone_offset_minutes);
        cols[0].values[t] = f.minute;
        cols[1].values[t] = f.hour;
        cols[2].values[t] = f.day_of_week;
        cols[3].values[t] = f.month;
        cols[4].values[t] = f.season;
        cols[5].values[t] = holidays.in_holiday_period(f.local_date) ? 1.0 : 0.0;
    }
    return cols;
}

bool is_categorical(std::string_view feature_name) {
    return std::find(kCategorical.begin(), kCategorical.end(), feature_name) != kCategorical.end();
}

std::size_t FeatureMatrix::feature_index(std::string_view name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) throw Error(ErrorCode::FeatureMismatch, "no feature '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t FeatureMatrix::horizon_index(int horizon) const {
    const auto it = std::find(horizons.begin(), horizons.end(), horizon);
    if (it == horizons.end()) {
        throw Error(ErrorCode::HorizonExceedsGrid, "horizon " + std::to_string(horizon) + " not in matrix");
    }
    return static_cast<std::size_t>(it - horizons.begin());
}

std::vector<std::size_t> partition_rows(const FeatureMatrix& m, Partition p, int horizon) {
    m.horizon_index(horizon);
    const auto h = static_cast<std::size_t>(horizon);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const std::size_t s = m.step[r];
        bool keep = false;
        switch (p) {
            case Partition::Train: keep = s + h < m.split.train_end; break;
            case Partition::Valid: keep = s >= m.split.train_end && s + h < m.split.valid_end; break;
            case Partition::Test: keep = s >= m.split.valid_end; break;
        }
        if (keep) out.push_back(r);
    }
    return out;
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    FeatureMatrix out;
    out.feature_names = m.feature_names;
    out.entity_names = m.entity_names;
    out.horizons = m.horizons;
    out.split = m.split;
    out.grid_start = m.grid_start;
    out.scaled = m.scaled;
    out.rows = rows.size();
    const std::size_t F = m.feature_count();
    out.values.reserve(rows.size() * F);
    out.target_values.assign(m.horizons.size(), {});
    out.target_levels.assign(m.horizons.size(), {});
    for (std::size_t r : rows) {
        const auto src = m.row(r);
        out.values.insert(out.values.end(), src.begin(), src.end());
        out.entity.push_back(m.entity[r]);
        out.step.push_back(m.step[r]);
        for (std::size_t h = 0; h < m.horizons.size(); ++h) {
            out.target_values[h].push_back(m.target_values[h][r]);
            out.target_levels[h].push_back(m.target_levels[h][r]);
        }
    }
    return out;
}

namespace {

struct EntityBlock {
    std::vector<double> values;
    std::vector<std::uint32_t> steps;
    std::vector<std::vector<double>> targets;
    std::vector<std::vector<int>> levels;
};

std::vector<Column> entity_columns(const DemandSeries& s, const FeatureConfig& config, const SplitIndices& split) {
    const std::span<const double> x(s.values);
    std::vector<Column> cols;
    cols.push_back(Column{"entity_code", std::vector<double>(x.size(), static_cast<double>(s.entity.code)), 0});
    cols.push_back(Column{"demand", std::vector<double>(x.begin(), x.end()), 0});
    const auto append = [&cols](std::vector<Column>&& more) {
        for (auto& c : more) cols.push_back(std::move(c));
    };
    if (config.include_lags) append(lag_features(x, config.lag_offsets));
    if (config.include_rolling) append(rolling_features(x, config.rolling_windows));
    if (config.include_ewma) append(ewma_features(x, config.ewma_spans));
    if (config.include_adjusted) {
        const auto q = fit_adjusted_quantiles(x.first(split.train_end), config.adjusted);
        cols.push_back(adjusted_demand(x, q, config.adjusted));
    }
    if (config.include_cv) append(rolling_cv(x, config.cv_windows));
    if (config.include_fourier) append(fourier_features(x, config.fourier, split.train_end));
    return cols;
}

}  // namespace

FeatureMatrix assemble_matrix(const DemandPanel& panel, const FeatureConfig& config, std::span<const int> horizons,
                              const labeling::LabelConfig& label_config, const SplitIndices& split,
                              const ingest::HolidayCalendar& holidays, AssembleOptions options) {
    config.validate();
    if (horizons.empty()) throw Error(ErrorCode::InvalidConfig, "at least one horizon is required");
    if (split.length != panel.length() || !(0 < split.train_end && split.train_end < split.valid_end &&
                                            split.valid_end < split.length)) {
        throw Error(ErrorCode::InvalidConfig, "split does not match the panel grid");
    }
    const auto targets = labeling::build_targets(panel, split, horizons, label_config);
    const auto calendar = calendar_features(panel.grid(), config.timezone_offset_minutes, holidays);
    const std::size_t max_h = static_cast<std::size_t>(*std::max_element(horizons.begin(), horizons.end()));
    const std::size_t n = panel.length();
    const std::size_t first = config.drop_warmup ? std::min(config.warmup(), n) : 0;
    const std::size_t last = n - max_h;  // exclusive: D_{t+H} must exist

    FeatureMatrix m;
    m.entity_names = panel.entity_names();
    m.horizons.assign(horizons.begin(), horizons.end());
    m.split = split;
    m.grid_start = panel.grid().start;

    std::vector<EntityBlock> blocks(panel.entity_count());
    std::vector<std::vector<std::string>> names(panel.entity_count());
    parallel_for(panel.entity_count(), options.jobs, [&](std::size_t e) {
        auto cols = entity_columns(panel.series(e), config, split);
        for (const auto& c : calendar) cols.push_back(c);
        auto& block = blocks[e];
        const std::size_t F = cols.size();
        block.targets.assign(horizons.size(), {});
        block.levels.assign(horizons.size(), {});
        for (const auto& c : cols) names[e].push_back(c.name);
        for (std::size_t t = first; t < last; ++t) {
            if (config.drop_warmup) {
                const bool complete = std::all_of(cols.begin(), cols.end(), [t](const Column& c) { return t >= c.warmup; });
                if (!complete) continue;
            }
            for (std::size_t f = 0; f < F; ++f) block.values.push_back(cols[f].values[t]);
            block.steps.push_back(static_cast<std::uint32_t>(t));
            for (std::size_t h = 0; h < horizons.size(); ++h) {
                block.targets[h].push_back(targets[e].values[h][t]);
                block.levels[h].push_back(targets[e].levels[h][t]);
            }
        }
    });

    m.feature_names = names.front();
    m.target_values.assign(horizons.size(), {});
    m.target_levels.assign(horizons.size(), {});
    for (std::size_t e = 0; e < blocks.size(); ++e) {
        auto& b = blocks[e];
        m.values.insert(m.values.end(), b.values.begin(), b.values.end());
        m.step.insert(m.step.end(), b.steps.begin(), b.steps.end());
        m.entity.insert(m.entity.end(), b.steps.size(), static_cast<std::uint32_t>(e));
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            m.target_values[h].insert(m.target_values[h].end(), b.targets[h].begin(), b.targets[h].end());
            m.target_levels[h].insert(m.target_levels[h].end(), b.levels[h].begin(), b.levels[h].end());
        }
    }
    m.rows = m.step.size();
    if (m.rows == 0) throw Error(ErrorCode::NoUsableRows, "no rows survive warm-up and horizon trimming");
    return m;
}

}  // namespace modeboost::features
