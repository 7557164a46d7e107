#include "trendgap/trend_forecast.hpp"

#include "trendgap/error.hpp"

#include <cmath>
#include <numbers>

namespace trendgap {

const char* to_string(ForecastMode mode) {
    switch (mode) {
    case ForecastMode::AlongTrend: return "along-trend";
    case ForecastMode::ReturnToTrend: return "return-to-trend";
    case ForecastMode::Pendulum: return "pendulum";
    }
    return "unknown";
}

ForecastMode parse_forecast_mode(std::string_view name) {
    if (name == "along-trend") return ForecastMode::AlongTrend;
    if (name == "return-to-trend") return ForecastMode::ReturnToTrend;
    if (name == "pendulum") return ForecastMode::Pendulum;
    throw Error("unknown forecast mode '" + std::string(name) + "'");
}

LinearSegment mirror_trend(const LinearSegment& prev, Anchor pivot, long duration_months) {
    if (duration_months < 12) throw Error("mirror duration must be at least 12 months");
    if (prev.slope == 0.0) throw Error("mirror undefined for a zero previous slope");
    return LinearSegment{pivot.stamp,     pivot.stamp.plus_months(duration_months),
                         pivot.value,     -prev.slope,
                         prev.r_squared,  prev.residual_sigma,
                         true};
}

LinearSegment endpoint_trend(Anchor start, Anchor end, double residual_sigma) {
    if (!(start.stamp < end.stamp)) throw Error("endpoint trend needs end after start");
    if (residual_sigma < 0.0) throw Error("residual_sigma must be non-negative");
    const double years = static_cast<double>(months_between(start.stamp, end.stamp)) / 12.0;
    const double slope = (end.value - start.value) / years;
    return LinearSegment{start.stamp, end.stamp, start.value, slope,
                         slope == 0.0 ? 0.0 : 1.0, residual_sigma, true};
}

Forecast forecast_along_trend(const LinearSegment& trend, MonthStamp origin, long horizon) {
    if (horizon < 1) throw Error("horizon must be at least 1 month");
    Forecast f{ForecastMode::AlongTrend, origin, {}, trend.residual_sigma};
    f.path.reserve(static_cast<std::size_t>(horizon));
    for (long m = 1; m <= horizon; ++m) {
        const MonthStamp s = origin.plus_months(m);
        f.path.push_back({s, trend.predict(s)});
    }
    return f;
}

Forecast forecast_return_to_trend(Anchor current, const LinearSegment& trend, MonthStamp deadline) {
    const long steps = months_between(current.stamp, deadline);
    if (steps < 1) throw Error("deadline must be after the forecast origin");
    const double deviation = current.value - trend.predict(current.stamp);
    Forecast f{ForecastMode::ReturnToTrend, current.stamp, {}, trend.residual_sigma};
    f.path.reserve(static_cast<std::size_t>(steps));
    for (long m = 1; m <= steps; ++m) {
        const MonthStamp s = current.stamp.plus_months(m);
        const double remaining = deviation * static_cast<double>(steps - m) / static_cast<double>(steps);
        f.path.push_back({s, trend.predict(s) + remaining});
    }
    return f;
}

namespace {

// Deviation from the trend m months after the origin.
double pendulum_offset(double start, double amplitude, long half_period, long m) {
    const double side = start >= 0.0 ? 1.0 : -1.0;
    const double p = static_cast<double>(half_period);
    const double pi = std::numbers::pi;
    if (m <= half_period) {
        const double centre = (start - side * amplitude) / 2.0;
        const double radius = (start + side * amplitude) / 2.0;
        return centre + radius * std::cos(pi * static_cast<double>(m) / p);
    }
    return -side * amplitude * std::cos(pi * static_cast<double>(m - half_period) / p);
}

} // namespace

Forecast forecast_pendulum(Anchor current, const LinearSegment& trend, double amplitude,
                           long half_period, long horizon) {
    if (!(amplitude > 0.0)) throw Error("pendulum amplitude must be positive");
    if (half_period < 2) throw Error("pendulum half_period must be at least 2 months");
    if (horizon < 1) throw Error("horizon must be at least 1 month");
    const double start = current.value - trend.predict(current.stamp);
    Forecast f{ForecastMode::Pendulum, current.stamp, {}, trend.residual_sigma};
    f.path.reserve(static_cast<std::size_t>(horizon));
    for (long m = 1; m <= horizon; ++m) {
        const MonthStamp s = current.stamp.plus_months(m);
        f.path.push_back({s, trend.predict(s) + pendulum_offset(start, amplitude, half_period, m)});
    }
    return f;
}

double pendulum_amplitude_for_level(Anchor current, const LinearSegment& trend, long half_period,
                                    double trough_level) {
    const double start = current.value - trend.predict(current.stamp);
    const double side = start >= 0.0 ? 1.0 : -1.0;
    const double at_extreme = trend.predict(current.stamp.plus_months(half_period));
    const double amplitude = side * (at_extreme - trough_level);
    if (!(amplitude > 0.0)) throw Error("target level is not on the overshoot side of the trend");
    return amplitude;
}

Forecast chain(const Forecast& first, const Forecast& second) {
    Forecast out = first;
    const MonthStamp last = first.path.empty() ? first.origin : first.path.back().stamp;
    for (const auto& o : second.path) {
        if (last < o.stamp) out.path.push_back(o);
    }
    out.band_sigma = std::max(first.band_sigma, second.band_sigma);
    return out;
}

} // namespace trendgap
