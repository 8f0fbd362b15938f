#pragma once

// Civil date <-> unix time conversions (days_from_civil algorithm) and
// ISO-8601 UTC timestamp parsing/formatting at second resolution. All times
// are UTC; no local-time or DST handling anywhere.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace meterae {

struct CivilTime {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

inline std::int64_t to_unix_seconds(const CivilTime& t) {
    return days_from_civil(t.year, t.month, t.day) * 86400 + t.hour * 3600 +
           t.minute * 60 + t.second;
}

inline CivilTime from_unix_seconds(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    std::int64_t rem = ts % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    CivilTime t;
    civil_from_days(days, t.year, t.month, t.day);
    t.hour = static_cast<int>(rem / 3600);
    t.minute = static_cast<int>((rem % 3600) / 60);
    t.second = static_cast<int>(rem % 60);
    return t;
}

// 0 = Monday ... 6 = Sunday.
inline int weekday_from_unix(std::int64_t ts) {
    std::int64_t days = ts / 86400;
    if (ts % 86400 < 0) days -= 1;
    const std::int64_t wd = (days + 3) % 7;  // 1970-01-01 was a Thursday
    return static_cast<int>(wd < 0 ? wd + 7 : wd);
}

inline std::string format_iso8601(std::int64_t ts) {
    const CivilTime t = from_unix_seconds(ts);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", t.year, t.month,
                  t.day, t.hour, t.minute, t.second);
    return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SSZ" (or with a space separator, or a trailing
// "+00:00"); also a bare date "YYYY-MM-DD" meaning midnight UTC.
inline std::int64_t parse_iso8601(const std::string& s) {
    CivilTime t;
    char sep = 0, tail = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d%c", &t.year, &t.month, &t.day,
                        &sep, &t.hour, &t.minute, &t.second, &tail);
    const bool date_only = n == 3 && s.size() == 10;
    if (!date_only) {
        if (n < 7 || (sep != 'T' && sep != ' '))
            throw std::invalid_argument("bad timestamp: '" + s + "'");
        if (n == 8 && tail != 'Z' && tail != '+')
            throw std::invalid_argument("bad timestamp suffix: '" + s + "'");
    }
    if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31 || t.hour > 23 ||
        t.minute > 59 || t.second > 60)
        throw std::invalid_argument("timestamp out of range: '" + s + "'");
    return to_unix_seconds(t);
}

}  // namespace meterae
