#pragma once

#include "modeboost/series.hpp"
#include "modeboost/timeutil.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace modeboost::ingest {

enum class VehicleType { Bicycle, EBike, EScooter };

std::optional<VehicleType> parse_vehicle_type(std::string_view text);

/// One vehicle observed by a 60-second poll of the public-space API.
struct SnapshotRecord {
    SecondStamp timestamp{};
    double latitude = 0.0;
    double longitude = 0.0;
    VehicleType vehicle_type = VehicleType::Bicycle;
    std::string operator_name;
    std::optional<std::string> entity_name;
};

struct SnapshotParseResult {
    std::vector<SnapshotRecord> records;
    std::size_t skipped = 0;
    std::vector<std::size_t> skipped_lines;
};

/// Header `timestamp,lat,lon,vehicle_type,operator[,entity]`. Invalid rows are
/// skipped and counted unless `strict`, in which case MalformedRow is thrown.
SnapshotParseResult parse_snapshots(const std::filesystem::path& path, bool strict = false);

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
};

struct Polygon {
    std::string name;
    std::vector<GeoPoint> outer;
    std::vector<std::vector<GeoPoint>> holes;
};

/// Named polygons; assignment is first match in file order.
struct RegionSet {
    std::vector<Polygon> polygons;
};

/// GeoJSON FeatureCollection of Polygon / MultiPolygon features with a `name`
/// property. Throws DegeneratePolygon for rings with fewer than 3 distinct vertices.
RegionSet load_regions(const std::filesystem::path& path);
RegionSet parse_regions(std::string_view geojson);

/// Boundary points (on an edge or vertex of any ring) count as inside.
bool contains(const Polygon& polygon, GeoPoint p);

struct RegionAssignment {
    std::vector<CountRecord> counts;
    std::size_t dropped = 0;
};

/// Maps each snapshot to the first containing polygon, contributing 1 to that
/// region and minute. Records carrying an entity name bypass the lookup; any
/// other record with an empty region set throws EmptyInput.
RegionAssignment assign_regions(std::span<const SnapshotRecord> records, const RegionSet& regions);

/// Trip archive row; absent fields are empty / nullopt.
struct TripRecord {
    std::string ride_id;
    std::optional<SecondStamp> start_time;
    std::optional<SecondStamp> end_time;
    std::string start_station;
    std::string end_station;

    friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

/// Header `ride_id,start_time,end_time,start_station,end_station` (the public
/// archive names `started_at`, `ended_at`, `start_station_name`,
/// `end_station_name` are accepted too). Unparseable timestamps load as absent.
std::vector<TripRecord> parse_trips(const std::filesystem::path& path);

struct CleaningRules {
    std::chrono::seconds max_duration{24 * 3600};
    std::chrono::seconds min_round_trip{120};
    double min_daily_starts = 3.0;
};

struct CleaningReport {
    std::size_t input = 0;
    std::size_t missing_field = 0;
    std::size_t negative_duration = 0;
    std::size_t too_long = 0;
    std::size_t short_round_trip = 0;
    std::size_t low_activity_trips = 0;
    std::size_t low_activity_stations = 0;
    std::size_t kept = 0;
};

struct CleaningResult {
    std::vector<TripRecord> kept;
    CleaningReport report;
};

/// Applies, in order: missing fields, end before start, duration above
/// max_duration, same-station trips below min_round_trip, then stations whose
/// surviving starts average below min_daily_starts per calendar day of the
/// surviving trips' date span. Idempotent.
CleaningResult clean_trips(std::span<const TripRecord> trips, const CleaningRules& rules = {});

/// `rule,count` CSV.
void write_cleaning_report(const CleaningReport& report, const std::filesystem::path& path);

/// Demand at (station, minute) = number of trip starts. Throws EmptyInput.
DemandPanel trips_to_panel(std::span<const TripRecord> trips);

struct SyntheticSpec {
    std::size_t entities = 5;
    std::size_t days = 28;
    Date start = Date{std::chrono::year{2021} / std::chrono::January / 4};
    /// Per-entity base level and daily amplitude; empty means the defaults
    /// base_e = 4(e+1), amplitude_e = 60(e+1).
    std::vector<double> base;
    std::vector<double> amplitudes;
    /// Multiplier applied on Saturdays and Sundays.
    double weekly_factor = 1.0;
    /// Multiplier applied on holiday dates.
    double holiday_factor = 0.5;
    /// 0 gives round(lambda); 1 gives Poisson(lambda); values in between shrink
    /// the Poisson deviation.
    double noise = 1.0;
    std::vector<Date> holiday_dates;
    std::uint64_t seed = 0;
};

/// Intensity of entity `e` at grid step `step` before noise.
double synthetic_intensity(const SyntheticSpec& spec, std::size_t e, std::size_t step);

/// Bit-reproducible for a fixed (spec, seed) on a given standard library.
DemandPanel generate_synthetic(const SyntheticSpec& spec);

class HolidayCalendar {
public:
    HolidayCalendar() = default;
    explicit HolidayCalendar(std::set<Date> dates) : dates_(std::move(dates)) {}

    bool contains(Date d) const { return dates_.contains(d); }
    /// The date itself or one day either side of a holiday.
    bool in_holiday_period(Date d) const;
    std::size_t size() const { return dates_.size(); }
    const std::set<Date>& dates() const { return dates_; }

private:
    std::set<Date> dates_;
};

/// One `YYYY-MM-DD` per line; blank and `#` lines ignored. Throws MalformedDate.
HolidayCalendar load_holidays(const std::filesystem::path& path);

}  // namespace modeboost::ingest
