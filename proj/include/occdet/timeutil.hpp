#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace occdet {

/// Parse "YYYY-MM-DDTHH:MM:SSZ" to unix seconds. Throws ValidationError on
/// anything else; this toolkit speaks UTC only.
std::int64_t parse_iso8601_utc(std::string_view s);

std::string format_iso8601_utc(std::int64_t ts);

/// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

void civil_from_days(std::int64_t days, int& year, unsigned& month, unsigned& day);

enum class Season { winter, summer };

/// Month-based: Nov-Mar is winter, Apr-Oct is summer. Keeps file round-trips
/// self-describing -- the season of a row is a function of its timestamp.
Season season_of(std::int64_t ts);

std::string_view season_name(Season s);

}  // namespace occdet
