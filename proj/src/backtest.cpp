#include "trendgap/backtest.hpp"

#include "trendgap/error.hpp"

#include <cmath>

namespace trendgap {

BacktestReport score_path(std::span<const Observation> predicted, const StampedSeries& actual) {
    struct Pair {
        MonthStamp stamp;
        double predicted;
        double actual;
    };
    std::vector<Pair> pairs;
    for (const auto& p : predicted) {
        if (auto a = actual.at(p.stamp)) pairs.push_back({p.stamp, p.value, *a});
    }
    if (pairs.empty()) throw Error("forecast and actuals share no months");

    BacktestReport r;
    r.n = pairs.size();
    double abs_sum = 0, sq_sum = 0, signed_sum = 0;
    for (const auto& p : pairs) {
        const double e = p.predicted - p.actual;
        abs_sum += std::abs(e);
        sq_sum += e * e;
        signed_sum += e;
    }
    const double n = static_cast<double>(r.n);
    r.mae = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);
    r.bias = signed_sum / n;

    std::size_t hits = 0;
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        if (months_between(pairs[i - 1].stamp, pairs[i].stamp) != 1) continue;
        const double dp = pairs[i].predicted - pairs[i - 1].predicted;
        const double da = pairs[i].actual - pairs[i - 1].actual;
        if (dp == 0.0 || da == 0.0) continue;
        ++r.direction_pairs;
        if ((dp > 0) == (da > 0)) ++hits;
    }
    r.direction_hit_rate =
        r.direction_pairs == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(r.direction_pairs);
    return r;
}

TrendSource parse_trend_source(std::string_view name) {
    if (name == "last-segment") return TrendSource::LastSegment;
    if (name == "mirror") return TrendSource::Mirror;
    if (name == "endpoint") return TrendSource::Endpoint;
    if (name == "last-value") return TrendSource::LastValue;
    throw Error("unknown trend source '" + std::string(name) + "'");
}

const char* to_string(TrendSource source) {
    switch (source) {
    case TrendSource::LastSegment: return "last-segment";
    case TrendSource::Mirror: return "mirror";
    case TrendSource::Endpoint: return "endpoint";
    case TrendSource::LastValue: return "last-value";
    }
    return "unknown";
}

OriginForecast forecast_at_origin(const DifferenceSeries& diff, const BacktestConfig& config,
                                  MonthStamp origin, long horizon) {
    const auto current_value = diff.at(origin);
    if (!current_value) throw Error("origin " + origin.to_string() + " not in the difference series");
    const Anchor current{origin, *current_value};

    // Everything after the origin is invisible from here on.
    DifferenceSeries visible = diff.truncated(origin);
    const auto& seg = config.segmentation;
    if (seg.fit_from) visible = visible.slice(*seg.fit_from, origin);

    OriginForecast out{std::nullopt, {}, {}};
    const auto& fc = config.forecast;
    const bool needs_model = fc.trend == TrendSource::LastSegment || fc.trend == TrendSource::Mirror;
    if (needs_model) {
        std::optional<MonthStamp> tail;
        if (seg.tail_transition_from && *seg.tail_transition_from <= origin) tail = seg.tail_transition_from;
        const DifferenceSeries fit_data =
            tail ? visible.truncated(tail->plus_months(-1)) : visible;
        const auto bps = detect_breakpoints(fit_data, seg.breakpoints, seg.min_len);
        out.model = build_trend_model(visible, bps, seg.transition_halfwidth, tail);
    }

    switch (fc.trend) {
    case TrendSource::LastSegment:
        out.trend = out.model->segments().back();
        break;
    case TrendSource::Mirror:
        if (!fc.pivot) throw Error("mirror trend needs a pivot");
        out.trend = mirror_trend(out.model->segments().back(), *fc.pivot, fc.mirror_duration);
        break;
    case TrendSource::Endpoint:
        if (!fc.start_anchor || !fc.end_anchor) throw Error("endpoint trend needs start and end anchors");
        out.trend = endpoint_trend(*fc.start_anchor, *fc.end_anchor);
        break;
    case TrendSource::LastValue:
        out.trend = LinearSegment{origin, origin.plus_months(1), current.value, 0.0, 0.0, 0.0, true};
        break;
    }

    switch (fc.mode) {
    case ForecastMode::AlongTrend:
        out.forecast = forecast_along_trend(out.trend, origin, horizon);
        break;
    case ForecastMode::ReturnToTrend: {
        const long deadline = fc.deadline_months > 0 ? fc.deadline_months : horizon;
        if (horizon < 1) throw Error("horizon must be at least 1 month");
        out.forecast = forecast_return_to_trend(current, out.trend, origin.plus_months(deadline));
        if (fc.chain_along_trend && deadline < horizon) {
            out.forecast = chain(out.forecast, forecast_along_trend(out.trend, origin, horizon));
        }
        if (static_cast<long>(out.forecast.path.size()) > horizon) {
            out.forecast.path.resize(static_cast<std::size_t>(horizon));
        }
        break;
    }
    case ForecastMode::Pendulum:
        out.forecast = forecast_pendulum(current, out.trend, fc.amplitude, fc.half_period, horizon);
        break;
    }
    return out;
}

std::vector<BacktestReport> rolling_backtest(const DifferenceSeries& diff, const BacktestConfig& config,
                                             std::span<const MonthStamp> origins, long horizon) {
    if (horizon < 1) throw Error("horizon must be at least 1 month");
    if (diff.empty()) throw Error("empty difference series");
    for (const auto& o : origins) {
        if (months_between(o, diff.back().stamp) < horizon) {
            throw Error("origin " + o.to_string() + " leaves fewer than " + std::to_string(horizon) +
                        " months of actuals");
        }
    }
    std::vector<BacktestReport> reports;
    reports.reserve(origins.size());
    for (const auto& o : origins) {
        const auto of = forecast_at_origin(diff, config, o, horizon);
        reports.push_back(score(of.forecast, diff));
    }
    return reports;
}

} // namespace trendgap
