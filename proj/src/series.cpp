#include "modeboost/series.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace modeboost {

std::optional<std::size_t> TimeGrid::index_of(MinuteStamp ts) const {
    if (ts < start) return std::nullopt;
    const auto offset = static_cast<std::size_t>((ts - start).count());
    if (offset >= length) return std::nullopt;
    return offset;
}

DemandPanel::DemandPanel(TimeGrid grid, std::vector<std::pair<std::string, std::vector<double>>> named_series)
    : grid_(grid) {
    if (named_series.empty()) throw Error(ErrorCode::InvalidSpec, "panel needs at least one entity");
    if (grid_.length < 1) throw Error(ErrorCode::InvalidSpec, "grid length must be >= 1");
    std::sort(named_series.begin(), named_series.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    series_.reserve(named_series.size());
    for (auto& [name, values] : named_series) {
        if (!series_.empty() && series_.back().entity.raw_name == name) {
            throw Error(ErrorCode::InvalidSpec, "duplicate entity name '" + name + "'");
        }
        if (values.size() != grid_.length) {
            throw Error(ErrorCode::InvalidSpec, "series '" + name + "' length " + std::to_string(values.size()) +
                                                    " != grid length " + std::to_string(grid_.length));
        }
        for (double v : values) {
            if (!std::isfinite(v) || v < 0.0) {
                throw Error(ErrorCode::InvalidSpec, "series '" + name + "' has a negative or non-finite value");
            }
        }
        DemandSeries s;
        s.entity = EntityId{std::move(name), series_.size()};
        s.values = std::move(values);
        series_.push_back(std::move(s));
    }
}

const DemandSeries& DemandPanel::series(std::size_t code) const {
    if (code >= series_.size()) throw Error(ErrorCode::UnknownEntity, "entity code " + std::to_string(code));
    return series_[code];
}

std::optional<std::size_t> DemandPanel::find(std::string_view name) const {
    auto it = std::lower_bound(series_.begin(), series_.end(), name,
                               [](const DemandSeries& s, std::string_view n) { return s.entity.raw_name < n; });
    if (it == series_.end() || it->entity.raw_name != name) return std::nullopt;
    return it->entity.code;
}

std::vector<std::string> DemandPanel::entity_names() const {
    std::vector<std::string> names;
    names.reserve(series_.size());
    for (const auto& s : series_) names.push_back(s.entity.raw_name);
    return names;
}

double DemandPanel::total() const {
    double sum = 0.0;
    for (const auto& s : series_) sum = std::accumulate(s.values.begin(), s.values.end(), sum);
    return sum;
}

DemandPanel floor_and_aggregate(std::span<const CountRecord> records, AggregationOptions options) {
    if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to aggregate");

    MinuteStamp lo = floor_to_minute(records.front().timestamp);
    MinuteStamp hi = lo;
    for (const auto& r : records) {
        const auto m = floor_to_minute(r.timestamp);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const TimeGrid grid{lo, static_cast<std::size_t>((hi - lo).count()) + 1};

    std::map<std::string, std::vector<double>> sums;
    std::map<std::string, std::vector<bool>> seen;
    for (const auto& r : records) {
        auto& vec = sums[r.entity];
        if (vec.empty()) {
            vec.assign(grid.length, 0.0);
            if (options.forward_fill) seen[r.entity].assign(grid.length, false);
        }
        const auto idx = *grid.index_of(floor_to_minute(r.timestamp));
        vec[idx] += r.count;
        if (options.forward_fill) seen[r.entity][idx] = true;
    }

    if (options.forward_fill) {
        for (auto& [name, vec] : sums) {
            const auto& mask = seen[name];
            std::optional<double> last;
            for (std::size_t i = 0; i < vec.size(); ++i) {
                if (mask[i]) {
                    last = vec[i];
                } else if (last) {
                    vec[i] = *last;
                }
            }
        }
    }

    std::vector<std::pair<std::string, std::vector<double>>> named;
    named.reserve(sums.size());
    for (auto& [name, vec] : sums) named.emplace_back(name, std::move(vec));
    return DemandPanel(grid, std::move(named));
}

SplitIndices chronological_split(std::size_t length, SplitRatios ratios) {
    if (!(ratios.train > 0.0 && ratios.valid > 0.0 && ratios.test > 0.0) ||
        std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidConfig, "split ratios must be positive and sum to 1");
    }
    if (length < 10) {
        throw Error(ErrorCode::GridTooShort, "grid length " + std::to_string(length) + " < 10");
    }
    // The epsilon absorbs binary rounding in the cumulative ratio (0.7 + 0.2 < 0.9).
    const auto cut = [length](double fraction) {
        return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(length) + 1e-9));
    };
    SplitIndices split{cut(ratios.train), cut(ratios.train + ratios.valid), length};
    if (!(0 < split.train_end && split.train_end < split.valid_end && split.valid_end < length)) {
        throw Error(ErrorCode::GridTooShort, "grid too short for a non-empty three-way split");
    }
    return split;
}

double entity_peak(const DemandPanel& panel, std::size_t entity_code, std::size_t upto) {
    const auto& values = panel.series(entity_code).values;
    if (upto == 0 || upto > values.size()) {
        throw Error(ErrorCode::InsufficientHistory, "peak window must cover [0, upto) with 1 <= upto <= length");
    }
    return *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(upto));
}

void write_panel_csv(const DemandPanel& panel, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "entity,timestamp,value\n";
    char buf[64];
    for (const auto& s : panel.all_series()) {
        const std::string name = csv::escape(s.entity.raw_name);
        for (std::size_t t = 0; t < s.values.size(); ++t) {
            auto res = std::to_chars(buf, buf + sizeof buf, s.values[t]);
            out << name << ',' << format_minute(panel.grid().at(t)) << ',' << std::string_view(buf, res.ptr - buf)
                << '\n';
        }
    }
    csv::write_file_atomic(path, out.str());
}

DemandPanel read_panel_csv(const std::filesystem::path& path, AggregationOptions options) {
    csv::Reader reader(path);
    const auto c_entity = reader.column("entity");
    const auto c_ts = reader.column("timestamp");
    const auto c_value = reader.column("value");
    if (!c_entity || !c_ts || !c_value) {
        throw Error(ErrorCode::MissingColumn, path.string() + ": expected header entity,timestamp,value");
    }
    std::vector<CountRecord> records;
    std::vector<std::string> fields;
    while (reader.next(fields)) {
        const auto need = std::max({*c_entity, *c_ts, *c_value});
        if (fields.size() <= need) {
            throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(reader.line_number()));
        }
        auto ts = parse_timestamp(fields[*c_ts]);
        if (!ts) {
            throw Error(ErrorCode::UnparseableTimestamp,
                        path.string() + ":" + std::to_string(reader.line_number()) + " '" + fields[*c_ts] + "'");
        }
        double value = 0.0;
        const auto& vf = fields[*c_value];
        auto [ptr, ec] = std::from_chars(vf.data(), vf.data() + vf.size(), value);
        if (ec != std::errc{} || ptr != vf.data() + vf.size() || !std::isfinite(value) || value < 0.0) {
            throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(reader.line_number()) +
                                                     " bad value '" + vf + "'");
        }
        records.push_back(CountRecord{fields[*c_entity], *ts, value});
    }
    return floor_and_aggregate(records, options);
}

}  // namespace modeboost
