#pragma once

#include "trendgap/month.hpp"
#include "trendgap/series.hpp"
#include "trendgap/trend_forecast.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trendgap {

/// Affine map from index points (or difference points) to US dollars.
struct PriceCalibration {
    double alpha = 1.0; ///< USD per index point
    double beta = 0.0;  ///< USD
    std::optional<double> fit_r_squared; ///< set only for fitted calibrations
    std::string source = "fitted";
};

/// price = -difference on the crude-petroleum difference scale
/// (a difference of -120 reads as $120 per barrel).
PriceCalibration crude_difference_heuristic();

struct PricePair {
    double index;
    double price_usd;
};

/// Percent change from `index_start` to `index_end`; start must be positive.
double percent_change(double index_start, double index_end);

/// headline(t) - difference(t) per month; stamps must match exactly.
std::vector<Observation> component_index_from_difference(std::span<const Observation> headline_path,
                                                         std::span<const Observation> difference_path);

/// Compounds the value at `origin` monthly at (1 + annual_rate/100)^(1/12).
std::vector<Observation> extrapolate_headline(const MonthlySeries& series, MonthStamp origin,
                                              long horizon, double annual_rate);

/// Geometric mean annual growth, in percent, over the `years` ending at `origin`.
double trailing_annual_growth(const MonthlySeries& series, MonthStamp origin, int years = 5);

PriceCalibration calibrate_price(std::span<const PricePair> pairs);

std::vector<PricePair> parse_price_pairs_csv(std::string_view text);

inline double index_to_price(const PriceCalibration& cal, double index) {
    return cal.alpha * index + cal.beta;
}

struct LeadLag {
    long lag = 0; ///< positive when `a` leads `b`
    double correlation = 0.0;
};

/// Lag in [-max_lag, max_lag] maximising corr(a(t), b(t + lag)). Each tested lag
/// must leave at least 24 overlapping months. Ties go to the smaller |lag|.
LeadLag lead_lag(const StampedSeries& a, const StampedSeries& b, long max_lag);

/// Same, after removing each series' own least-squares line.
LeadLag lead_lag_detrended(const StampedSeries& a, const StampedSeries& b, long max_lag);

inline constexpr std::size_t kMinLeadLagOverlap = 24;

} // namespace trendgap
