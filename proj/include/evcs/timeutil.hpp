// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace evcs {

/// Seconds since the Unix epoch, always UTC.
using EpochSeconds = std::int64_t;

struct CivilTime {
    int year;
    int month;  // 1..12
    int day;    // 1..31
    int hour;   // 0..23
    int minute; // 0..59
    int second; // 0..59
};

// Days from 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d);
CivilTime civil_from_epoch(EpochSeconds t);
EpochSeconds epoch_from_civil(const CivilTime& c);

/// Hour of day 0..23 for a UTC epoch time.
int hour_of_day(EpochSeconds t);

/// Weekday 0..6 with Monday = 0.
int weekday(EpochSeconds t);

/// Parses "YYYY-MM-DD HH:MM[:SS]", "YYYY-MM-DDTHH:MM[:SS][Z|+hh:mm|-hh:mm]"
/// or the HTTP-date style used by the ACN exports
/// ("Thu, 26 Apr 2018 14:07:02 GMT"). Naive timestamps are taken as UTC.
std::optional<EpochSeconds> parse_timestamp(const std::string& text);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(EpochSeconds t);

} // namespace evcs
