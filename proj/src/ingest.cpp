#include "modeboost/ingest.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace modeboost::ingest {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::size_t> first_column(const csv::Reader& reader, std::initializer_list<std::string_view> names) {
    for (auto n : names) {
        if (auto c = reader.column(n)) return c;
    }
    return std::nullopt;
}

}  // namespace

std::optional<VehicleType> parse_vehicle_type(std::string_view text) {
    const auto t = lower(text);
    if (t == "bicycle" || t == "bike") return VehicleType::Bicycle;
    if (t == "e-bike" || t == "ebike" || t == "e_bike") return VehicleType::EBike;
    if (t == "e-scooter" || t == "escooter" || t == "e_scooter" || t == "scooter") return VehicleType::EScooter;
    return std::nullopt;
}

SnapshotParseResult parse_snapshots(const std::filesystem::path& path, bool strict) {
    csv::Reader reader(path);
    const auto c_ts = reader.column("timestamp");
    const auto c_lat = reader.column("lat");
    const auto c_lon = reader.column("lon");
    const auto c_type = reader.column("vehicle_type");
    const auto c_op = reader.column("operator");
    const auto c_entity = reader.column("entity");
    for (auto [col, name] : {std::pair{c_ts, "timestamp"}, {c_lat, "lat"}, {c_lon, "lon"},
                             {c_type, "vehicle_type"}, {c_op, "operator"}}) {
        if (!col) throw Error(ErrorCode::MissingColumn, path.string() + ": missing column '" + name + "'");
    }

    SnapshotParseResult result;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const auto get = [&f](std::size_t c) -> std::string_view { return c < f.size() ? f[c] : std::string_view{}; };
        auto ts = parse_timestamp(get(*c_ts));
        auto lat = parse_double(get(*c_lat));
        auto lon = parse_double(get(*c_lon));
        auto type = parse_vehicle_type(get(*c_type));
        const bool ok = ts && lat && lon && type && *lat >= -90.0 && *lat <= 90.0 && *lon >= -180.0 && *lon <= 180.0;
        if (!ok) {
            if (strict) throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(reader.line_number()));
            ++result.skipped;
            result.skipped_lines.push_back(reader.line_number());
            continue;
        }
        SnapshotRecord rec;
        rec.timestamp = *ts;
        rec.latitude = *lat;
        rec.longitude = *lon;
        rec.vehicle_type = *type;
        rec.operator_name = std::string(get(*c_op));
        if (c_entity && !get(*c_entity).empty()) rec.entity_name = std::string(get(*c_entity));
        result.records.push_back(std::move(rec));
    }
    return result;
}

namespace {

std::vector<GeoPoint> parse_ring(const nlohmann::json& ring, const std::string& name) {
    std::vector<GeoPoint> pts;
    for (const auto& c : ring) {
        if (!c.is_array() || c.size() < 2) throw Error(ErrorCode::DegeneratePolygon, name + ": bad coordinate");
        pts.push_back(GeoPoint{c[0].get<double>(), c[1].get<double>()});
    }
    // GeoJSON rings repeat the first vertex at the end.
    if (pts.size() >= 2 && pts.front().lon == pts.back().lon && pts.front().lat == pts.back().lat) pts.pop_back();
    std::vector<GeoPoint> distinct;
    for (const auto& p : pts) {
        const bool dup = std::any_of(distinct.begin(), distinct.end(),
                                     [&](const GeoPoint& q) { return q.lon == p.lon && q.lat == p.lat; });
        if (!dup) distinct.push_back(p);
    }
    if (distinct.size() < 3) throw Error(ErrorCode::DegeneratePolygon, name);
    return pts;
}

Polygon parse_polygon(const nlohmann::json& rings, const std::string& name) {
    if (!rings.is_array() || rings.empty()) throw Error(ErrorCode::DegeneratePolygon, name);
    Polygon poly;
    poly.name = name;
    poly.outer = parse_ring(rings[0], name);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], name));
    return poly;
}

// Collinearity tolerance scales with the squared edge extent.
bool on_segment(GeoPoint p, GeoPoint a, GeoPoint b) {
    const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    const double scale = std::max({std::abs(b.lon - a.lon), std::abs(b.lat - a.lat), 1.0});
    if (std::abs(cross) > 1e-12 * scale * scale) return false;
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
           p.lat <= std::max(a.lat, b.lat);
}

bool on_ring_boundary(const std::vector<GeoPoint>& ring, GeoPoint p) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        if (on_segment(p, ring[j], ring[i])) return true;
    }
    return false;
}

// Even-odd ray casting towards +lon.
bool ray_inside(const std::vector<GeoPoint>& ring, GeoPoint p) {
    bool inside = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

RegionSet parse_regions(std::string_view geojson) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(geojson);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("regions: ") + e.what());
    }
    if (!doc.contains("features") || !doc["features"].is_array()) {
        throw Error(ErrorCode::InvalidSpec, "regions: expected a FeatureCollection");
    }
    RegionSet set;
    std::size_t index = 0;
    for (const auto& feature : doc["features"]) {
        std::string name = "region_" + std::to_string(index++);
        if (feature.contains("properties") && feature["properties"].is_object() &&
            feature["properties"].contains("name") && feature["properties"]["name"].is_string()) {
            name = feature["properties"]["name"].get<std::string>();
        }
        const auto& geom = feature.at("geometry");
        const auto type = geom.at("type").get<std::string>();
        if (type == "Polygon") {
            set.polygons.push_back(parse_polygon(geom.at("coordinates"), name));
        } else if (type == "MultiPolygon") {
            for (const auto& part : geom.at("coordinates")) set.polygons.push_back(parse_polygon(part, name));
        } else {
            throw Error(ErrorCode::InvalidSpec, "regions: unsupported geometry '" + type + "' for " + name);
        }
    }
    return set;
}

RegionSet load_regions(const std::filesystem::path& path) { return parse_regions(csv::read_file(path)); }

bool contains(const Polygon& polygon, GeoPoint p) {
    if (on_ring_boundary(polygon.outer, p)) return true;
    if (!ray_inside(polygon.outer, p)) return false;
    for (const auto& hole : polygon.holes) {
        if (on_ring_boundary(hole, p)) return true;
        if (ray_inside(hole, p)) return false;
    }
    return true;
}

RegionAssignment assign_regions(std::span<const SnapshotRecord> records, const RegionSet& regions) {
    RegionAssignment out;
    out.counts.reserve(records.size());
    for (const auto& r : records) {
        if (r.entity_name) {
            out.counts.push_back(CountRecord{*r.entity_name, r.timestamp, 1.0});
            continue;
        }
        if (regions.polygons.empty()) throw Error(ErrorCode::EmptyInput, "region set is empty");
        const GeoPoint p{r.longitude, r.latitude};
        const auto it = std::find_if(regions.polygons.begin(), regions.polygons.end(),
                                     [&](const Polygon& poly) { return contains(poly, p); });
        if (it == regions.polygons.end()) {
            ++out.dropped;
        } else {
            out.counts.push_back(CountRecord{it->name, r.timestamp, 1.0});
        }
    }
    return out;
}

std::vector<TripRecord> parse_trips(const std::filesystem::path& path) {
    csv::Reader reader(path);
    const auto c_id = first_column(reader, {"ride_id", "tripid", "trip_id"});
    const auto c_start = first_column(reader, {"start_time", "started_at", "starttime"});
    const auto c_end = first_column(reader, {"end_time", "ended_at", "stoptime"});
    const auto c_from = first_column(reader, {"start_station", "start_station_name"});
    const auto c_to = first_column(reader, {"end_station", "end_station_name"});
    for (auto [col, name] : {std::pair{c_id, "ride_id"}, {c_start, "start_time"}, {c_end, "end_time"},
                             {c_from, "start_station"}, {c_to, "end_station"}}) {
        if (!col) throw Error(ErrorCode::MissingColumn, path.string() + ": missing column '" + name + "'");
    }
    std::vector<TripRecord> trips;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const auto get = [&f](std::size_t c) -> std::string { return c < f.size() ? f[c] : std::string{}; };
        TripRecord t;
        t.ride_id = get(*c_id);
        const auto s = get(*c_start);
        const auto e = get(*c_end);
        if (!s.empty()) t.start_time = parse_timestamp(s);
        if (!e.empty()) t.end_time = parse_timestamp(e);
        t.start_station = get(*c_from);
        t.end_station = get(*c_to);
        trips.push_back(std::move(t));
    }
    return trips;
}

CleaningResult clean_trips(std::span<const TripRecord> trips, const CleaningRules& rules) {
    CleaningResult result;
    auto& report = result.report;
    report.input = trips.size();

    std::vector<const TripRecord*> survivors;
    survivors.reserve(trips.size());
    for (const auto& t : trips) {
        if (t.ride_id.empty() || !t.start_time || !t.end_time || t.start_station.empty() || t.end_station.empty()) {
            ++report.missing_field;
            continue;
        }
        const auto duration = *t.end_time - *t.start_time;
        if (duration < std::chrono::seconds{0}) {
            ++report.negative_duration;
            continue;
        }
        if (duration > rules.max_duration) {
            ++report.too_long;
            continue;
        }
        if (t.start_station == t.end_station && duration < rules.min_round_trip) {
            ++report.short_round_trip;
            continue;
        }
        survivors.push_back(&t);
    }

    if (!survivors.empty()) {
        Date first = std::chrono::floor<std::chrono::days>(*survivors.front()->start_time);
        Date last = first;
        std::map<std::string, std::size_t> starts;
        for (const auto* t : survivors) {
            const Date d = std::chrono::floor<std::chrono::days>(*t->start_time);
            first = std::min(first, d);
            last = std::max(last, d);
            ++starts[t->start_station];
        }
        const double span_days = static_cast<double>((last - first).count() + 1);
        std::set<std::string> inactive;
        for (const auto& [station, n] : starts) {
            if (static_cast<double>(n) / span_days < rules.min_daily_starts) inactive.insert(station);
        }
        report.low_activity_stations = inactive.size();
        for (const auto* t : survivors) {
            if (inactive.contains(t->start_station)) {
                ++report.low_activity_trips;
            } else {
                result.kept.push_back(*t);
            }
        }
    }
    report.kept = result.kept.size();
    return result;
}

void write_cleaning_report(const CleaningReport& r, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "rule,count\n"
        << "input," << r.input << '\n'
        << "missing_field," << r.missing_field << '\n'
        << "negative_duration," << r.negative_duration << '\n'
        << "longer_than_max_duration," << r.too_long << '\n'
        << "short_round_trip," << r.short_round_trip << '\n'
        << "low_activity_station_trips," << r.low_activity_trips << '\n'
        << "low_activity_stations," << r.low_activity_stations << '\n'
        << "kept," << r.kept << '\n';
    csv::write_file_atomic(path, out.str());
}

DemandPanel trips_to_panel(std::span<const TripRecord> trips) {
    std::vector<CountRecord> counts;
    counts.reserve(trips.size());
    for (const auto& t : trips) {
        if (!t.start_time || t.start_station.empty()) continue;
        counts.push_back(CountRecord{t.start_station, *t.start_time, 1.0});
    }
    if (counts.empty()) throw Error(ErrorCode::EmptyInput, "no trips with a start time and station");
    return floor_and_aggregate(counts);
}

namespace {

void validate(const SyntheticSpec& spec) {
    if (spec.entities < 1) throw Error(ErrorCode::InvalidSpec, "entities must be >= 1");
    if (spec.days < 1) throw Error(ErrorCode::InvalidSpec, "days must be >= 1");
    if (!spec.base.empty() && spec.base.size() != spec.entities)
        throw Error(ErrorCode::InvalidSpec, "base must list one value per entity");
    if (!spec.amplitudes.empty() && spec.amplitudes.size() != spec.entities)
        throw Error(ErrorCode::InvalidSpec, "amplitudes must list one value per entity");
    const auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
    if (std::any_of(spec.base.begin(), spec.base.end(), bad) ||
        std::any_of(spec.amplitudes.begin(), spec.amplitudes.end(), bad))
        throw Error(ErrorCode::InvalidSpec, "base and amplitudes must be finite and >= 0");
    if (bad(spec.weekly_factor) || bad(spec.holiday_factor) || bad(spec.noise))
        throw Error(ErrorCode::InvalidSpec, "weekly_factor, holiday_factor and noise must be finite and >= 0");
}

}  // namespace

double synthetic_intensity(const SyntheticSpec& spec, std::size_t e, std::size_t step) {
    const double base = spec.base.empty() ? 4.0 * static_cast<double>(e + 1) : spec.base[e];
    const double amp = spec.amplitudes.empty() ? 60.0 * static_cast<double>(e + 1) : spec.amplitudes[e];
    const std::size_t minute_of_day = step % 1440;
    const Date date = spec.start + std::chrono::days(step / 1440);
    const unsigned iso = std::chrono::weekday{date}.iso_encoding();

    const double phase = 2.0 * std::numbers::pi * static_cast<double>(minute_of_day) / 1440.0;
    double lambda = base + amp * std::max(0.0, std::sin(phase));
    if (iso >= 6) lambda *= spec.weekly_factor;
    if (std::find(spec.holiday_dates.begin(), spec.holiday_dates.end(), date) != spec.holiday_dates.end()) {
        lambda *= spec.holiday_factor;
    }
    return lambda;
}

DemandPanel generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    const std::size_t length = spec.days * 1440;
    Xoshiro256 rng(spec.seed);
    std::vector<std::pair<std::string, std::vector<double>>> named;
    named.reserve(spec.entities);
    for (std::size_t e = 0; e < spec.entities; ++e) {
        char name[32];
        std::snprintf(name, sizeof name, "entity_%02zu", e);
        std::vector<double> values(length);
        for (std::size_t t = 0; t < length; ++t) {
            const double lambda = synthetic_intensity(spec, e, t);
            double v = lambda;
            if (spec.noise > 0.0 && lambda > 0.0) {
                std::poisson_distribution<long long> draw(lambda);
                v = lambda + spec.noise * (static_cast<double>(draw(rng)) - lambda);
            }
            values[t] = std::max(0.0, std::round(v));
        }
        named.emplace_back(name, std::move(values));
    }
    return DemandPanel(TimeGrid{MinuteStamp{spec.start}, length}, std::move(named));
}

bool HolidayCalendar::in_holiday_period(Date d) const {
    return contains(d) || contains(d - std::chrono::days{1}) || contains(d + std::chrono::days{1});
}

HolidayCalendar load_holidays(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::set<Date> dates;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::string_view s = line;
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        if (s.empty() || s.front() == '#') continue;
        auto d = parse_date(s);
        if (!d) throw Error(ErrorCode::MalformedDate, path.string() + ":" + std::to_string(n) + " '" + line + "'");
        dates.insert(*d);
    }
    return HolidayCalendar(std::move(dates));
}

}  // namespace modeboost::ingest
