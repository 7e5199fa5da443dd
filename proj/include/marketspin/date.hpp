#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "marketspin/common.hpp"

namespace mspin {

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    unsigned month = 1; // 1..12
    unsigned day = 1;   // 1..31

    static bool leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

    static unsigned days_in_month(int y, unsigned m) {
        static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        return m == 2 && leap(y) ? 29 : kDays[m - 1];
    }

    bool valid() const {
        return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
    }

    /// ISO-8601 YYYY-MM-DD only.
    static std::optional<Date> try_parse(std::string_view s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        auto num = [&](std::size_t pos, std::size_t len, int& out) {
            out = 0;
            for (std::size_t i = pos; i < pos + len; ++i) {
                if (s[i] < '0' || s[i] > '9') return false;
                out = out * 10 + (s[i] - '0');
            }
            return true;
        };
        int y, m, d;
        if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
        Date date{y, static_cast<unsigned>(m), static_cast<unsigned>(d)};
        if (!date.valid()) return std::nullopt;
        return date;
    }

    static Date parse(std::string_view s) {
        auto d = try_parse(s);
        if (!d) throw Error("malformed date: '" + std::string(s) + "' (expected YYYY-MM-DD)");
        return *d;
    }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
        return buf;
    }

    int quarter() const { return static_cast<int>((month - 1) / 3) + 1; }

    /// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
    std::int64_t serial() const {
        int y = year - (month <= 2);
        std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        unsigned yoe = static_cast<unsigned>(y - era * 400);
        unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
        unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static Date from_serial(std::int64_t z) {
        z += 719468;
        std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        unsigned doe = static_cast<unsigned>(z - era * 146097);
        unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        unsigned mp = (5 * doy + 2) / 153;
        unsigned d = doy - (153 * mp + 2) / 5 + 1;
        unsigned m = mp + (mp < 10 ? 3 : -9);
        return Date{static_cast<int>(y + (m <= 2)), m, d};
    }

    Date plus_days(std::int64_t n) const { return from_serial(serial() + n); }

    friend auto operator<=>(const Date&, const Date&) = default;
};

/// First and last calendar day of the quarter containing `d`.
inline std::pair<Date, Date> quarter_range(int year, int quarter) {
    unsigned m0 = static_cast<unsigned>((quarter - 1) * 3 + 1);
    Date lo{year, m0, 1};
    Date hi{year, m0 + 2, Date::days_in_month(year, m0 + 2)};
    return {lo, hi};
}

} // namespace mspin
