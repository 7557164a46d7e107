#pragma once

#include "trendgap/month.hpp"
#include "trendgap/segment_fit.hpp"
#include "trendgap/series.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace trendgap {

/// A (month, level) point that a trend is drawn through.
struct Anchor {
    MonthStamp stamp;
    double value;
};

enum class ForecastMode { AlongTrend, ReturnToTrend, Pendulum };

const char* to_string(ForecastMode mode);
ForecastMode parse_forecast_mode(std::string_view name);

/// Predicted difference path. Stamps start the month after `origin`.
struct Forecast {
    ForecastMode mode;
    MonthStamp origin;
    std::vector<Observation> path;
    double band_sigma = 0.0; ///< half-width of the constant +/- envelope
};

/// Successor trend with the previous slope negated, anchored at `pivot`.
LinearSegment mirror_trend(const LinearSegment& prev, Anchor pivot, long duration_months);

/// The line through two anchors. `residual_sigma` sets the forecast band.
LinearSegment endpoint_trend(Anchor start, Anchor end, double residual_sigma = 0.0);

Forecast forecast_along_trend(const LinearSegment& trend, MonthStamp origin, long horizon);

/// Closes the current deviation from `trend` in equal monthly steps, landing on the
/// trend exactly at `deadline`.
Forecast forecast_return_to_trend(Anchor current, const LinearSegment& trend, MonthStamp deadline);

/// Cosine swing through the trend to an overshoot of `amplitude` on the opposite side
/// after `half_period` months, then free oscillation of that amplitude about the trend.
Forecast forecast_pendulum(Anchor current, const LinearSegment& trend, double amplitude,
                           long half_period, long horizon);

/// Amplitude that puts the pendulum's first extreme at `trough_level` in absolute terms.
double pendulum_amplitude_for_level(Anchor current, const LinearSegment& trend, long half_period,
                                    double trough_level);

/// `first` followed by the part of `second` after `first`'s last month.
Forecast chain(const Forecast& first, const Forecast& second);

} // namespace trendgap
