#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace trendgap {

/// A calendar month. Ordered by (year, month).
class MonthStamp {
public:
    /// January 2000; lets stamps live in default-constructed aggregates.
    MonthStamp() = default;
    MonthStamp(int year, int month);

    /// Parses a zero-padded `YYYY-MM` token.
    static MonthStamp parse(std::string_view token);

    /// Inverse of ordinal().
    static MonthStamp from_ordinal(long ordinal);

    int year() const { return year_; }
    int month() const { return month_; }

    /// Months since year 0, January. Differences of ordinals count months.
    long ordinal() const { return static_cast<long>(year_) * 12 + (month_ - 1); }

    /// t = year + (month - 1) / 12, so January 2000 is 2000.0.
    double fractional_year() const { return year_ + (month_ - 1) / 12.0; }

    MonthStamp plus_months(long n) const { return from_ordinal(ordinal() + n); }

    std::string to_string() const;

    friend auto operator<=>(const MonthStamp&, const MonthStamp&) = default;
    friend bool operator==(const MonthStamp&, const MonthStamp&) = default;

private:
    int year_ = 2000;
    int month_ = 1;
};

/// Signed month count from `from` to `to`.
inline long months_between(MonthStamp from, MonthStamp to) {
    return to.ordinal() - from.ordinal();
}

} // namespace trendgap
