#include "modeboost/postprocess.hpp"

#include "modeboost/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace modeboost {

std::string_view to_string(ScaleMode m) { return m == ScaleMode::MinMax ? "minmax" : "zscore"; }

ScaleMode parse_scale_mode(std::string_view s) {
    if (s == "minmax") return ScaleMode::MinMax;
    if (s == "zscore") return ScaleMode::ZScore;
    throw Error(ErrorCode::InvalidConfig, "unknown scale mode '" + std::string(s) + "'");
}

Scaler::Scaler(ScaleMode mode, std::vector<std::string> names, std::vector<Column> columns)
    : mode_(mode), names_(std::move(names)), columns_(std::move(columns)) {
    if (names_.size() != columns_.size()) throw Error(ErrorCode::FeatureMismatch, "scaler names and columns differ");
}

double Scaler::transform_value(std::size_t f, double x) const {
    const auto& c = columns_[f];
    if (c.categorical) return x;
    if (c.spread == 0.0) return 0.0;
    return (x - c.offset) / c.spread;
}

double Scaler::inverse_value(std::size_t f, double y) const {
    const auto& c = columns_[f];
    if (c.categorical) return y;
    return y * c.spread + c.offset;
}

void Scaler::transform_row(std::span<double> row) const {
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = transform_value(f, row[f]);
}

void Scaler::check_names(const FeatureMatrix& m) const {
    if (m.feature_names != names_) {
        throw Error(ErrorCode::FeatureMismatch, "matrix features do not match the fitted scaler");
    }
}

FeatureMatrix Scaler::transform(const FeatureMatrix& m) const {
    check_names(m);
    if (m.scaled) throw Error(ErrorCode::AlreadyTransformed, "matrix is already scaled");
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < out.rows; ++r) transform_row(out.row(r));
    out.scaled = true;
    return out;
}

FeatureMatrix Scaler::inverse_transform(const FeatureMatrix& m) const {
    check_names(m);
    if (!m.scaled) throw Error(ErrorCode::InvalidSpec, "matrix is not scaled");
    FeatureMatrix out = m;
    const std::size_t F = names_.size();
    for (std::size_t r = 0; r < out.rows; ++r) {
        auto row = out.row(r);
        for (std::size_t f = 0; f < F; ++f) row[f] = inverse_value(f, row[f]);
    }
    out.scaled = false;
    return out;
}

void Scaler::write(binary::Writer& w) const {
    w.integer(static_cast<std::uint8_t>(mode_));
    w.integer(static_cast<std::uint32_t>(names_.size()));
    for (std::size_t f = 0; f < names_.size(); ++f) {
        w.string(names_[f]);
        w.integer(static_cast<std::uint8_t>(columns_[f].categorical ? 1 : 0));
        w.f64(columns_[f].offset);
        w.f64(columns_[f].spread);
    }
}

Scaler Scaler::read(binary::Reader& r) {
    const auto mode = r.integer<std::uint8_t>();
    if (mode > 1) throw Error(ErrorCode::CorruptFile, "unknown scaler mode");
    const auto n = r.integer<std::uint32_t>();
    std::vector<std::string> names;
    std::vector<Column> cols;
    for (std::uint32_t f = 0; f < n; ++f) {
        names.push_back(r.string());
        Column c;
        c.categorical = r.integer<std::uint8_t>() != 0;
        c.offset = r.f64();
        c.spread = r.f64();
        cols.push_back(c);
    }
    return Scaler(static_cast<ScaleMode>(mode), std::move(names), std::move(cols));
}

std::string Scaler::bytes() const {
    binary::Writer w;
    write(w);
    return w.take();
}

Scaler fit_scaler(const FeatureMatrix& m, const SplitIndices& split, ScaleMode mode) {
    const std::size_t F = m.feature_count();
    std::vector<long double> sum(F, 0.0L), sq(F, 0.0L);
    std::vector<double> lo(F, std::numeric_limits<double>::infinity());
    std::vector<double> hi(F, -std::numeric_limits<double>::infinity());
    std::size_t n = 0;
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (m.step[r] >= split.train_end) continue;
        ++n;
        const auto row = m.row(r);
        for (std::size_t f = 0; f < F; ++f) {
            lo[f] = std::min(lo[f], row[f]);
            hi[f] = std::max(hi[f], row[f]);
            sum[f] += row[f];
        }
    }
    if (n == 0) throw Error(ErrorCode::EmptyTraining, "no training rows to fit the scaler on");
    if (mode == ScaleMode::ZScore) {
        for (std::size_t r = 0; r < m.rows; ++r) {
            if (m.step[r] >= split.train_end) continue;
            const auto row = m.row(r);
            for (std::size_t f = 0; f < F; ++f) {
                const long double d = row[f] - sum[f] / n;
                sq[f] += d * d;
            }
        }
    }
    std::vector<Scaler::Column> cols(F);
    for (std::size_t f = 0; f < F; ++f) {
        auto& c = cols[f];
        c.categorical = features::is_categorical(m.feature_names[f]);
        if (c.categorical) continue;
        if (mode == ScaleMode::MinMax) {
            c.offset = lo[f];
            c.spread = hi[f] - lo[f];
        } else {
            c.offset = static_cast<double>(sum[f] / n);
            c.spread = static_cast<double>(std::sqrt(sq[f] / n));
        }
    }
    return Scaler(mode, m.feature_names, std::move(cols));
}

std::map<std::string, std::uint32_t> encode_entities(std::span<const std::string> names) {
    std::vector<std::string> sorted(names.begin(), names.end());
    std::sort(sorted.begin(), sorted.end());
    if (auto dup = std::adjacent_find(sorted.begin(), sorted.end()); dup != sorted.end()) {
        throw Error(ErrorCode::DuplicateName, "duplicate entity name '" + *dup + "'");
    }
    std::map<std::string, std::uint32_t> codes;
    for (std::uint32_t i = 0; i < sorted.size(); ++i) codes.emplace(sorted[i], i);
    return codes;
}

}  // namespace modeboost
