#include "trendgap/month.hpp"

#include "trendgap/error.hpp"

#include <charconv>
#include <cstdio>

namespace trendgap {

MonthStamp::MonthStamp(int year, int month) : year_(year), month_(month) {
    if (month < 1 || month > 12) {
        throw Error("month out of range: " + std::to_string(month));
    }
}

MonthStamp MonthStamp::parse(std::string_view token) {
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    bool shaped = token.size() == 7 && token[4] == '-';
    for (std::size_t i = 0; shaped && i < token.size(); ++i) {
        if (i != 4 && !is_digit(token[i])) shaped = false;
    }
    if (!shaped) {
        throw Error("malformed date '" + std::string(token) + "', expected YYYY-MM");
    }
    int year = 0;
    int month = 0;
    std::from_chars(token.data(), token.data() + 4, year);
    std::from_chars(token.data() + 5, token.data() + 7, month);
    if (month < 1 || month > 12) {
        throw Error("malformed date '" + std::string(token) + "', month out of range");
    }
    return MonthStamp(year, month);
}

MonthStamp MonthStamp::from_ordinal(long ordinal) {
    long year = ordinal / 12;
    long month0 = ordinal % 12;
    if (month0 < 0) {
        month0 += 12;
        --year;
    }
    return MonthStamp(static_cast<int>(year), static_cast<int>(month0) + 1);
}

std::string MonthStamp::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year_, month_);
    return buf;
}

} // namespace trendgap
