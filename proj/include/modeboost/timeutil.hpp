#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace modeboost {

/// UTC instant at minute resolution; the grid unit for every demand series.
using MinuteStamp = std::chrono::sys_time<std::chrono::minutes>;
using SecondStamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// Accepts `YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z|(+|-)HH[:]MM]`. Offsets are
/// applied so the result is UTC. Returns nullopt on any syntax or range error.
std::optional<SecondStamp> parse_timestamp(std::string_view text);

/// `YYYY-MM-DD` only.
std::optional<Date> parse_date(std::string_view text);

inline MinuteStamp floor_to_minute(SecondStamp ts) {
    return std::chrono::floor<std::chrono::minutes>(ts);
}

/// `YYYY-MM-DDTHH:MM`, the canonical panel timestamp rendering.
std::string format_minute(MinuteStamp ts);
std::string format_date(Date d);

/// Broken-down local calendar fields for a UTC minute shifted by `offset_minutes`.
struct CalendarFields {
    int minute = 0;        // 0..59
    int hour = 0;          // 0..23
    int day_of_week = 0;   // 0..6, Monday = 0
    int month = 0;         // 0..11, January = 0
    int season = 1;        // 1..4, Dec-Feb = 1 (meteorological)
    int minute_of_day = 0; // 0..1439
    Date local_date{};
};

CalendarFields calendar_fields(MinuteStamp ts, int offset_minutes);

}  // namespace modeboost
