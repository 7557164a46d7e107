#pragma once

#include "trendgap/month.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trendgap {

struct Observation {
    MonthStamp stamp;
    double value;

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Observations with strictly increasing stamps and finite values.
/// Immutable once constructed.
class StampedSeries {
public:
    explicit StampedSeries(std::vector<Observation> observations);

    std::span<const Observation> observations() const { return observations_; }
    std::size_t size() const { return observations_.size(); }
    bool empty() const { return observations_.empty(); }
    const Observation& front() const { return observations_.front(); }
    const Observation& back() const { return observations_.back(); }

    std::optional<double> at(MonthStamp stamp) const;
    std::vector<double> values() const;

    /// Months inside [front, back] that have no observation.
    std::vector<MonthStamp> missing_months() const;

    /// Observations with first <= stamp <= last.
    std::vector<Observation> window(MonthStamp first, MonthStamp last) const;

protected:
    std::vector<Observation> observations_;
};

/// One published index series, in index points relative to its base period.
class MonthlySeries : public StampedSeries {
public:
    MonthlySeries(std::string series_id, std::vector<Observation> observations,
                  std::string base_note = {});

    const std::string& series_id() const { return series_id_; }
    const std::string& base_note() const { return base_note_; }

    friend bool operator==(const MonthlySeries& a, const MonthlySeries& b) {
        return a.series_id_ == b.series_id_ && a.base_note_ == b.base_note_ &&
               a.observations_ == b.observations_;
    }

private:
    std::string series_id_;
    std::string base_note_;
};

/// headline(t) - component(t) over the months both parents share.
class DifferenceSeries : public StampedSeries {
public:
    DifferenceSeries(std::string minuend_id, std::string subtrahend_id,
                     std::vector<Observation> observations);

    const std::string& minuend_id() const { return minuend_id_; }
    const std::string& subtrahend_id() const { return subtrahend_id_; }

    /// Copy restricted to [first, last].
    DifferenceSeries slice(MonthStamp first, MonthStamp last) const;

    /// Copy restricted to stamps <= last.
    DifferenceSeries truncated(MonthStamp last) const;

private:
    std::string minuend_id_;
    std::string subtrahend_id_;
};

/// Parses `date,value` CSV. Rows may come in any order; LF or CRLF.
MonthlySeries parse_series_csv(std::string_view text, std::string series_id);

/// Writes `date,value` CSV with LF endings and shortest round-trip numbers.
std::string format_series_csv(std::span<const Observation> observations);

/// Restricts both series to their common months.
std::pair<MonthlySeries, MonthlySeries> align(const MonthlySeries& a, const MonthlySeries& b);

DifferenceSeries difference(const MonthlySeries& headline, const MonthlySeries& component);

/// Scales the series so that its value at `anchor` becomes `anchor_value`.
MonthlySeries rebase(const MonthlySeries& series, MonthStamp anchor, double anchor_value);

} // namespace trendgap
