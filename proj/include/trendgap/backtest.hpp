#pragma once

#include "trendgap/month.hpp"
#include "trendgap/segment_fit.hpp"
#include "trendgap/series.hpp"
#include "trendgap/trend_forecast.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace trendgap {

/// Forecast errors over the months where forecast and actuals overlap.
/// Errors are predicted - actual.
struct BacktestReport {
    std::optional<MonthStamp> origin;
    std::size_t n = 0;
    double mae = 0.0;
    double rmse = 0.0;
    double bias = 0.0;
    /// Sign agreement of month-over-month changes. Pairs where either change is
    /// zero are skipped; 0 when no pair counts.
    double direction_hit_rate = 0.0;
    std::size_t direction_pairs = 0;
};

BacktestReport score_path(std::span<const Observation> predicted, const StampedSeries& actual);

inline BacktestReport score(const Forecast& forecast, const StampedSeries& actual) {
    auto r = score_path(forecast.path, actual);
    r.origin = forecast.origin;
    return r;
}

/// Where the forecast's reference trend comes from at each origin.
enum class TrendSource {
    LastSegment, ///< continue the last segment fitted on data up to the origin
    Mirror,      ///< mirror of that segment through `pivot`
    Endpoint,    ///< fixed line through `start_anchor` and `end_anchor`
    LastValue,   ///< flat line at the origin's observed value
};

TrendSource parse_trend_source(std::string_view name);
const char* to_string(TrendSource source);

struct SegmentationConfig {
    int breakpoints = 1;
    long min_len = kDefaultMinSegmentMonths;
    long transition_halfwidth = kDefaultTransitionHalfwidth;
    std::optional<MonthStamp> fit_from;
    /// Months from here on are treated as an ongoing transition and not fitted.
    std::optional<MonthStamp> tail_transition_from;
};

struct ForecastConfig {
    ForecastMode mode = ForecastMode::AlongTrend;
    TrendSource trend = TrendSource::LastSegment;
    std::optional<Anchor> pivot;
    long mirror_duration = 84;
    std::optional<Anchor> start_anchor;
    std::optional<Anchor> end_anchor;
    /// Return-to-trend deadline in months after the origin; 0 means the horizon.
    long deadline_months = 0;
    /// After the deadline, continue along the trend up to the horizon.
    bool chain_along_trend = true;
    double amplitude = 0.0;
    long half_period = 6;
};

struct BacktestConfig {
    SegmentationConfig segmentation;
    ForecastConfig forecast;
};

/// The trend and forecast a model sees at `origin`, built from data up to `origin` only.
struct OriginForecast {
    std::optional<TrendModel> model;
    LinearSegment trend;
    Forecast forecast;
};

OriginForecast forecast_at_origin(const DifferenceSeries& diff, const BacktestConfig& config,
                                  MonthStamp origin, long horizon);

std::vector<BacktestReport> rolling_backtest(const DifferenceSeries& diff, const BacktestConfig& config,
                                             std::span<const MonthStamp> origins, long horizon);

} // namespace trendgap
