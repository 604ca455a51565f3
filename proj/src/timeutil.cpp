// SPDX-License-Identifier: Apache-2.0
#include "evcs/timeutil.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <cstring>

namespace evcs {

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

static void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

CivilTime civil_from_epoch(EpochSeconds t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) { rem += 86400; days -= 1; }
    CivilTime c{};
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600);
    c.minute = static_cast<int>((rem % 3600) / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

EpochSeconds epoch_from_civil(const CivilTime& c) {
    return days_from_civil(c.year, c.month, c.day) * 86400 + c.hour * 3600 + c.minute * 60 + c.second;
}

int hour_of_day(EpochSeconds t) {
    std::int64_t rem = t % 86400;
    if (rem < 0) rem += 86400;
    return static_cast<int>(rem / 3600);
}

int weekday(EpochSeconds t) {
    std::int64_t days = t / 86400;
    if (t % 86400 < 0) days -= 1;
    // 1970-01-01 was a Thursday; Monday = 0.
    std::int64_t w = (days + 3) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

namespace {

const std::array<const char*, 12> kMonthNames = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

int month_from_name(const char* s) {
    for (int i = 0; i < 12; ++i)
        if (std::strncmp(s, kMonthNames[i], 3) == 0) return i + 1;
    return 0;
}

// "Thu, 26 Apr 2018 14:07:02 GMT" (day name and zone token optional)
std::optional<EpochSeconds> parse_http_date(const std::string& text) {
    const char* p = text.c_str();
    while (*p == ' ') ++p;
    if (std::isalpha(static_cast<unsigned char>(*p))) {
        const char* comma = std::strchr(p, ',');
        if (!comma) return std::nullopt;
        p = comma + 1;
    }
    CivilTime c{};
    char mon[4] = {0};
    char zone[8] = {0};
    int n = std::sscanf(p, " %d %3s %d %d:%d:%d %7s",
                        &c.day, mon, &c.year, &c.hour, &c.minute, &c.second, zone);
    if (n < 6) return std::nullopt;
    c.month = month_from_name(mon);
    if (c.month == 0) return std::nullopt;
    EpochSeconds t = epoch_from_civil(c);
    if (n == 7 && zone[0] != 0 && std::strcmp(zone, "GMT") != 0 && std::strcmp(zone, "UTC") != 0) {
        // numeric offset like -0700
        int sign = zone[0] == '-' ? -1 : 1;
        if (zone[0] == '+' || zone[0] == '-') {
            int hh = (zone[1] - '0') * 10 + (zone[2] - '0');
            int mm = (zone[3] - '0') * 10 + (zone[4] - '0');
            t -= sign * (hh * 3600 + mm * 60);
        }
    }
    return t;
}

std::optional<EpochSeconds> parse_iso(const std::string& text) {
    CivilTime c{};
    int consumed = 0;
    int n = std::sscanf(text.c_str(), "%d-%d-%d%*1[T ]%d:%d%n", &c.year, &c.month, &c.day,
                        &c.hour, &c.minute, &consumed);
    if (n < 5) return std::nullopt;
    const char* p = text.c_str() + consumed;
    if (*p == ':') {
        int sec = 0, used = 0;
        if (std::sscanf(p, ":%d%n", &sec, &used) == 1) { c.second = sec; p += used; }
        if (*p == '.') { ++p; while (std::isdigit(static_cast<unsigned char>(*p))) ++p; }
    }
    EpochSeconds t = epoch_from_civil(c);
    if (*p == 'Z' || *p == 'z') return t;
    if (*p == '+' || *p == '-') {
        int sign = *p == '-' ? -1 : 1;
        int hh = 0, mm = 0;
        if (std::sscanf(p + 1, "%d:%d", &hh, &mm) >= 1) {
            if (hh > 99) { mm = hh % 100; hh /= 100; } // +0200 form
            t -= sign * (hh * 3600 + mm * 60);
        }
    }
    return t;
}

} // namespace

std::optional<EpochSeconds> parse_timestamp(const std::string& text) {
    if (text.empty()) return std::nullopt;
    // ISO forms start with a digit; HTTP dates start with a letter or have
    // a month name token.
    if (std::isdigit(static_cast<unsigned char>(text[0]))) return parse_iso(text);
    return parse_http_date(text);
}

std::string format_timestamp(EpochSeconds t) {
    CivilTime c = civil_from_epoch(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  c.year, c.month, c.day, c.hour, c.minute, c.second);
    return buf;
}

} // namespace evcs
