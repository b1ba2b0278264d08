/*
 * Copyright 2026 wcnet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <compare>
#include <cstdio>
#include <string>
#include <string_view>
#include <tuple>

#include "wcnet/common.hpp"

namespace wcnet {

/// Calendar date stored as a serial day count (proleptic Gregorian,
/// days since 1970-01-01). Comparison and subtraction work on the serial.
class Date {
public:
    Date() = default;

    static Date from_ymd(int year, unsigned month, unsigned day) {
        if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
            throw DataError("invalid calendar date " + std::to_string(year) + "-" +
                            std::to_string(month) + "-" + std::to_string(day));
        Date d;
        d.serial_ = days_from_civil(year, month, day);
        return d;
    }

    /// Parses `text` against a format containing %Y, %m, %d and literal
    /// separators (default ISO-8601, "%Y-%m-%d").
    static Date parse(std::string_view text, std::string_view format = "%Y-%m-%d") {
        int year = 0;
        unsigned month = 0, day = 0;
        bool have_y = false, have_m = false, have_d = false;
        std::size_t pos = 0;
        for (std::size_t fi = 0; fi < format.size(); ++fi) {
            if (format[fi] == '%' && fi + 1 < format.size()) {
                const char spec = format[++fi];
                std::size_t digits = 0;
                long value = 0;
                const std::size_t max_digits = (spec == 'Y') ? 4 : 2;
                while (pos < text.size() && digits < max_digits &&
                       text[pos] >= '0' && text[pos] <= '9') {
                    value = value * 10 + (text[pos] - '0');
                    ++pos;
                    ++digits;
                }
                if (digits == 0)
                    throw DataError("unparseable date '" + std::string(text) + "' for format '" +
                                    std::string(format) + "'");
                switch (spec) {
                    case 'Y': year = static_cast<int>(value); have_y = true; break;
                    case 'm': month = static_cast<unsigned>(value); have_m = true; break;
                    case 'd': day = static_cast<unsigned>(value); have_d = true; break;
                    default:
                        throw ConfigError(std::string("unsupported date format specifier %") + spec);
                }
            } else {
                if (pos >= text.size() || text[pos] != format[fi])
                    throw DataError("unparseable date '" + std::string(text) + "' for format '" +
                                    std::string(format) + "'");
                ++pos;
            }
        }
        if (pos != text.size() || !have_y || !have_m || !have_d)
            throw DataError("unparseable date '" + std::string(text) + "' for format '" +
                            std::string(format) + "'");
        return from_ymd(year, month, day);
    }

    long serial() const { return serial_; }

    std::string to_iso() const {
        auto [y, m, d] = civil_from_days(serial_);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
        return buf;
    }

    friend bool operator==(Date a, Date b) { return a.serial_ == b.serial_; }
    friend auto operator<=>(Date a, Date b) { return a.serial_ <=> b.serial_; }
    friend long operator-(Date a, Date b) { return a.serial_ - b.serial_; }

private:
    long serial_ = 0;

    static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

    static unsigned days_in_month(int y, unsigned m) {
        static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        return (m == 2 && is_leap(y)) ? 29 : lengths[m - 1];
    }

    // Howard Hinnant's civil-days algorithms.
    static long days_from_civil(int y, unsigned m, unsigned d) {
        y -= m <= 2;
        const long era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<long>(doe) - 719468;
    }

    static std::tuple<int, unsigned, unsigned> civil_from_days(long z) {
        z += 719468;
        const long era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const long y = static_cast<long>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        return {static_cast<int>(y + (m <= 2)), m, d};
    }
};

}  // namespace wcnet
