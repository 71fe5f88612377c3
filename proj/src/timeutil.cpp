#include "modeboost/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace modeboost {

namespace {

using namespace std::chrono;

// Reads exactly `width` digits at `pos`, advancing it.
bool read_digits(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    int value = 0;
    for (std::size_t i = 0; i < width; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    pos += width;
    out = value;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

std::optional<Date> read_date(std::string_view s, std::size_t& pos) {
    int y = 0, m = 0, d = 0;
    if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, m) ||
        !expect(s, pos, '-') || !read_digits(s, pos, 2, d)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    text = trim(text);
    std::size_t pos = 0;
    auto date = read_date(text, pos);
    if (!date || pos != text.size()) return std::nullopt;
    return date;
}

std::optional<SecondStamp> parse_timestamp(std::string_view text) {
    text = trim(text);
    std::size_t pos = 0;
    auto date = read_date(text, pos);
    if (!date) return std::nullopt;
    if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) return std::nullopt;
    ++pos;

    int hh = 0, mm = 0, ss = 0;
    if (!read_digits(text, pos, 2, hh) || !expect(text, pos, ':') || !read_digits(text, pos, 2, mm)) {
        return std::nullopt;
    }
    if (expect(text, pos, ':')) {
        if (!read_digits(text, pos, 2, ss)) return std::nullopt;
        if (expect(text, pos, '.')) {
            // Fractional seconds are truncated.
            const std::size_t start = pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
            if (pos == start) return std::nullopt;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

    int offset = 0;
    if (pos < text.size()) {
        const char c = text[pos];
        if (c == 'Z' || c == 'z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            ++pos;
            int oh = 0, om = 0;
            if (!read_digits(text, pos, 2, oh)) return std::nullopt;
            expect(text, pos, ':');
            if (!read_digits(text, pos, 2, om)) return std::nullopt;
            offset = (c == '+' ? 1 : -1) * (oh * 60 + om);
        } else {
            return std::nullopt;
        }
    }
    if (pos != text.size()) return std::nullopt;

    return SecondStamp{*date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset};
}

std::string format_minute(MinuteStamp ts) {
    const auto day_start = floor<days>(ts);
    const year_month_day ymd{day_start};
    const auto tod = ts - day_start;
    const auto total = tod.count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(total / 60), static_cast<int>(total % 60));
    return buf;
}

std::string format_date(Date d) {
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

CalendarFields calendar_fields(MinuteStamp ts, int offset_minutes) {
    const MinuteStamp local = ts + minutes{offset_minutes};
    const auto day_start = floor<days>(local);
    const year_month_day ymd{day_start};
    const int mod = static_cast<int>((local - day_start).count());

    CalendarFields f;
    f.minute_of_day = mod;
    f.minute = mod % 60;
    f.hour = mod / 60;
    f.day_of_week = static_cast<int>(weekday{day_start}.iso_encoding()) - 1;
    f.month = static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
    // Dec-Feb -> 1, Mar-May -> 2, Jun-Aug -> 3, Sep-Nov -> 4
    f.season = ((f.month + 1) % 12) / 3 + 1;
    f.local_date = day_start;
    return f;
}

}  // namespace modeboost
