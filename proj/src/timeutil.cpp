#include "occdet/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "occdet/types.hpp"

namespace occdet {

namespace {

int parse_int(std::string_view s, std::size_t pos, std::size_t len) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, value);
    if (ec != std::errc{} || ptr != s.data() + pos + len)
        throw ValidationError("bad timestamp: '" + std::string(s) + "'");
    return value;
}

}  // namespace

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, unsigned& month, unsigned& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = doy - (153 * mp + 2) / 5 + 1;
    month = mp + (mp < 10 ? 3 : -9);
    year = static_cast<int>(y + (month <= 2));
}

std::int64_t parse_iso8601_utc(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SSZ, 20 chars exactly.
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
        s[16] != ':' || s[19] != 'Z')
        throw ValidationError("bad timestamp: '" + std::string(s) +
                              "' (expected YYYY-MM-DDTHH:MM:SSZ)");
    int year = parse_int(s, 0, 4);
    int month = parse_int(s, 5, 2);
    int day = parse_int(s, 8, 2);
    int hour = parse_int(s, 11, 2);
    int minute = parse_int(s, 14, 2);
    int second = parse_int(s, 17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60)
        throw ValidationError("bad timestamp: '" + std::string(s) + "' (field out of range)");
    return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) *
               86400 +
           hour * 3600 + minute * 60 + second;
}

std::string format_iso8601_utc(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    std::int64_t rem = ts % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int year;
    unsigned month, day;
    civil_from_days(days, year, month, day);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", year, month, day,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

Season season_of(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    if (ts % 86400 < 0) --days;
    int year;
    unsigned month, day;
    civil_from_days(days, year, month, day);
    return (month >= 11 || month <= 3) ? Season::winter : Season::summer;
}

std::string_view season_name(Season s) {
    return s == Season::winter ? "winter" : "summer";
}

}  // namespace occdet
