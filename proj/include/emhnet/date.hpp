#pragma once

#include <charconv>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "emhnet/error.hpp"

namespace emhnet {

enum class Frequency { monthly, quarterly };

inline int months_per_step(Frequency f) { return f == Frequency::monthly ? 1 : 3; }
inline int steps_per_year(Frequency f) { return f == Frequency::monthly ? 12 : 4; }

inline std::string_view to_string(Frequency f) { return f == Frequency::monthly ? "monthly" : "quarterly"; }

inline Frequency parse_frequency(std::string_view text) {
    if (text == "monthly") return Frequency::monthly;
    if (text == "quarterly") return Frequency::quarterly;
    throw ConfigError("unknown frequency '" + std::string(text) + "' (expected monthly or quarterly)");
}

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend auto operator<=>(const Date&, const Date&) = default;

    /// Months since year 0; consecutive observations differ by months_per_step.
    [[nodiscard]] int month_index() const { return year * 12 + (month - 1); }

    /// Decimal year used for the time column of padded panels.
    [[nodiscard]] double decimal_year() const { return year + (month - 1) / 12.0; }
};

inline bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

inline int days_in_month(int year, int month) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return month == 2 && is_leap(year) ? 29 : days[month - 1];
}

/// Last calendar day of the month reached by moving `months` from `d`.
inline Date month_end_after(const Date& d, int months) {
    const int index = d.month_index() + months;
    Date out;
    out.year = index / 12;
    out.month = index % 12 + 1;
    out.day = days_in_month(out.year, out.month);
    return out;
}

inline std::string to_string(const Date& d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

/// Parses `YYYY-MM-DD`. Throws DataError on malformed input.
inline Date parse_date(std::string_view text) {
    auto fail = [&] { return DataError("invalid ISO-8601 date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
    auto field = [&](std::size_t pos, std::size_t len) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
        if (ec != std::errc{} || ptr != text.data() + pos + len) throw fail();
        return value;
    };
    Date d{field(0, 4), field(5, 2), field(8, 2)};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) throw fail();
    return d;
}

}  // namespace emhnet
