#include "trendgap/cli.hpp"

#include "trendgap/error.hpp"
#include "trendgap/fetch.hpp"
#include "trendgap/format.hpp"
#include "trendgap/price_translate.hpp"
#include "trendgap/segment_fit.hpp"
#include "trendgap/serialize.hpp"
#include "trendgap/series.hpp"
#include "trendgap/trend_forecast.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace trendgap::cli {

using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Files are staged in memory and written only after the whole command succeeded.
class OutputSet {
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

    void commit(const fs::path& dir) const {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
        for (const auto& [name, content] : files_) {
            std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + (dir / name).string());
            out << content;
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string fixed(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", decimals, v);
    return buf;
}

// ---- config parsing -------------------------------------------------------

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error("config: '" + where + "." + key + "' missing or of the wrong type");
    }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw Error("config: '" + where + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
            allowed.end()) {
            throw Error("config: unknown key '" + where + "." + key + "'");
        }
    }
}

std::optional<MonthStamp> opt_stamp(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return MonthStamp::parse(get<std::string>(obj, key, where));
}

AnchorSpec parse_anchor(const json& obj, const std::string& where) {
    check_keys(obj, {"date", "value", "mean_from", "mean_to"}, where);
    AnchorSpec a;
    a.date = MonthStamp::parse(get<std::string>(obj, "date", where));
    if (obj.contains("value")) a.value = get<double>(obj, "value", where);
    if (obj.contains("mean_from") || obj.contains("mean_to")) {
        a.mean_window = std::make_pair(MonthStamp::parse(get<std::string>(obj, "mean_from", where)),
                                       MonthStamp::parse(get<std::string>(obj, "mean_to", where)));
    }
    if (a.value.has_value() == a.mean_window.has_value()) {
        throw Error("config: '" + where + "' needs exactly one of 'value' or 'mean_from'/'mean_to'");
    }
    return a;
}

CalibrationKind parse_calibration_kind(const std::string& name) {
    if (name == "none") return CalibrationKind::None;
    if (name == "heuristic") return CalibrationKind::Heuristic;
    if (name == "fitted") return CalibrationKind::Fitted;
    throw Error("unknown calibration '" + name + "' (none | heuristic | fitted)");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

} // namespace

RunConfig load_run_config(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    RunConfig cfg;
    check_keys(doc,
               {"series", "difference", "segmentation", "forecast", "calibration", "translate", "lead_lag",
                "backtest", "out"},
               "config");

    if (doc.contains("series")) {
        for (const auto& s : doc.at("series")) {
            check_keys(s, {"id", "path", "base_note"}, "series[]");
            cfg.series.push_back({get<std::string>(s, "id", "series[]"),
                                  resolve(base, get<std::string>(s, "path", "series[]")),
                                  s.value("base_note", std::string{})});
        }
    }
    if (doc.contains("difference")) {
        const auto& d = doc.at("difference");
        check_keys(d, {"minuend", "subtrahend", "path"}, "difference");
        if (d.contains("minuend")) cfg.minuend = get<std::string>(d, "minuend", "difference");
        if (d.contains("subtrahend")) cfg.subtrahend = get<std::string>(d, "subtrahend", "difference");
        if (d.contains("path")) cfg.difference_path = resolve(base, get<std::string>(d, "path", "difference"));
    }
    if (doc.contains("segmentation")) {
        const auto& s = doc.at("segmentation");
        check_keys(s, {"k", "min_len", "transition_halfwidth", "fit_from", "tail_transition_from", "model_path"},
                   "segmentation");
        if (s.contains("k")) {
            if (s.at("k").is_string() && s.at("k") == "auto") {
                cfg.auto_k = true;
            } else {
                cfg.k = get<int>(s, "k", "segmentation");
            }
        }
        if (s.contains("min_len")) cfg.min_len = get<long>(s, "min_len", "segmentation");
        if (s.contains("transition_halfwidth")) {
            cfg.transition_halfwidth = get<long>(s, "transition_halfwidth", "segmentation");
        }
        cfg.fit_from = opt_stamp(s, "fit_from", "segmentation");
        cfg.tail_transition_from = opt_stamp(s, "tail_transition_from", "segmentation");
        if (s.contains("model_path")) cfg.model_path = resolve(base, get<std::string>(s, "model_path", "segmentation"));
    }
    if (doc.contains("forecast")) {
        const auto& f = doc.at("forecast");
        const std::string w = "forecast";
        check_keys(f,
                   {"mode", "trend", "origin", "deadline", "horizon", "until", "chain_along_trend", "amplitude",
                    "trough_level", "half_period", "path"},
                   w);
        auto& fc = cfg.forecast;
        if (f.contains("mode")) fc.mode = parse_forecast_mode(get<std::string>(f, "mode", w));
        if (f.contains("trend")) {
            const auto& t = f.at("trend");
            check_keys(t, {"source", "start", "end", "pivot", "duration", "residual_sigma"}, "forecast.trend");
            fc.trend = parse_trend_source(get<std::string>(t, "source", "forecast.trend"));
            if (t.contains("start")) fc.start = parse_anchor(t.at("start"), "forecast.trend.start");
            if (t.contains("end")) fc.end = parse_anchor(t.at("end"), "forecast.trend.end");
            if (t.contains("pivot")) fc.pivot = parse_anchor(t.at("pivot"), "forecast.trend.pivot");
            if (t.contains("duration")) fc.mirror_duration = get<long>(t, "duration", "forecast.trend");
            if (t.contains("residual_sigma")) fc.residual_sigma = get<double>(t, "residual_sigma", "forecast.trend");
        }
        fc.origin = opt_stamp(f, "origin", w);
        fc.deadline = opt_stamp(f, "deadline", w);
        fc.until = opt_stamp(f, "until", w);
        if (f.contains("horizon")) fc.horizon = get<long>(f, "horizon", w);
        if (f.contains("chain_along_trend")) fc.chain_along_trend = get<bool>(f, "chain_along_trend", w);
        if (f.contains("amplitude")) fc.amplitude = get<double>(f, "amplitude", w);
        if (f.contains("trough_level")) fc.trough_level = get<double>(f, "trough_level", w);
        if (f.contains("half_period")) fc.half_period = get<long>(f, "half_period", w);
        if (f.contains("path")) cfg.forecast_path = resolve(base, get<std::string>(f, "path", w));
    }
    if (doc.contains("calibration")) {
        const auto& c = doc.at("calibration");
        check_keys(c, {"kind", "pairs_path"}, "calibration");
        cfg.calibration = parse_calibration_kind(get<std::string>(c, "kind", "calibration"));
        if (c.contains("pairs_path")) cfg.pairs_path = resolve(base, get<std::string>(c, "pairs_path", "calibration"));
    }
    if (doc.contains("translate")) {
        const auto& t = doc.at("translate");
        check_keys(t, {"headline_annual_rate", "growth_years"}, "translate");
        if (t.contains("headline_annual_rate") && !t.at("headline_annual_rate").is_null()) {
            cfg.headline_annual_rate = get<double>(t, "headline_annual_rate", "translate");
        }
        if (t.contains("growth_years")) cfg.growth_years = get<int>(t, "growth_years", "translate");
    }
    if (doc.contains("lead_lag")) {
        const auto& l = doc.at("lead_lag");
        check_keys(l, {"leader_minuend", "leader_subtrahend", "max_lag", "from", "to"}, "lead_lag");
        LeadLagSettings s;
        s.leader_minuend = get<std::string>(l, "leader_minuend", "lead_lag");
        s.leader_subtrahend = get<std::string>(l, "leader_subtrahend", "lead_lag");
        if (l.contains("max_lag")) s.max_lag = get<long>(l, "max_lag", "lead_lag");
        s.from = opt_stamp(l, "from", "lead_lag");
        s.to = opt_stamp(l, "to", "lead_lag");
        cfg.lead_lag = s;
    }
    if (doc.contains("backtest")) {
        const auto& b = doc.at("backtest");
        check_keys(b, {"origins", "horizon", "baseline"}, "backtest");
        if (b.contains("origins")) {
            for (const auto& o : b.at("origins")) cfg.origins.push_back(MonthStamp::parse(o.get<std::string>()));
        }
        if (b.contains("horizon")) cfg.backtest_horizon = get<long>(b, "horizon", "backtest");
        if (b.contains("baseline")) {
            const auto& bl = b.at("baseline");
            check_keys(bl, {"mode", "trend"}, "backtest.baseline");
            BaselineSettings s;
            if (bl.contains("mode")) s.mode = parse_forecast_mode(get<std::string>(bl, "mode", "backtest.baseline"));
            if (bl.contains("trend")) s.trend = parse_trend_source(get<std::string>(bl, "trend", "backtest.baseline"));
            cfg.baseline = s;
        }
    }
    if (doc.contains("out")) cfg.out = resolve(base, get<std::string>(doc, "out", "config"));
    return cfg;
}

namespace {

// ---- shared pipeline pieces -----------------------------------------------

const SeriesSpec& find_series(const RunConfig& cfg, const std::string& id) {
    for (const auto& s : cfg.series) {
        if (s.id == id) return s;
    }
    throw Error("series '" + id + "' not listed in the config");
}

MonthlySeries load_series(const SeriesSpec& spec) {
    if (!fs::exists(spec.path)) throw Error("series file not found: " + spec.path.string());
    try {
        auto s = parse_series_csv(read_file(spec.path), spec.id);
        return MonthlySeries(s.series_id(), {s.observations().begin(), s.observations().end()}, spec.base_note);
    } catch (const Error& e) {
        throw Error(spec.path.string() + ": " + e.what());
    }
}

fs::path difference_file(const RunConfig& cfg) {
    return cfg.difference_path ? *cfg.difference_path : cfg.out / "difference.csv";
}

DifferenceSeries load_difference(const RunConfig& cfg) {
    const fs::path path = difference_file(cfg);
    if (!fs::exists(path)) throw Error("difference file not found: " + path.string());
    try {
        const auto s = parse_series_csv(read_file(path), "difference");
        return DifferenceSeries(cfg.minuend.empty() ? "minuend" : cfg.minuend,
                                cfg.subtrahend.empty() ? "subtrahend" : cfg.subtrahend,
                                {s.observations().begin(), s.observations().end()});
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

std::optional<PriceCalibration> load_calibration(const RunConfig& cfg) {
    switch (cfg.calibration) {
    case CalibrationKind::None: return std::nullopt;
    case CalibrationKind::Heuristic: return crude_difference_heuristic();
    case CalibrationKind::Fitted:
        if (!cfg.pairs_path) throw Error("fitted calibration needs 'pairs_path'");
        if (!fs::exists(*cfg.pairs_path)) throw Error("calibration pairs not found: " + cfg.pairs_path->string());
        return calibrate_price(parse_price_pairs_csv(read_file(*cfg.pairs_path)));
    }
    return std::nullopt;
}

double mean_level(const StampedSeries& diff, MonthStamp from, MonthStamp to) {
    const auto obs = diff.window(from, to);
    if (obs.empty()) throw Error("no observations in " + from.to_string() + ".." + to.to_string());
    double sum = 0.0;
    for (const auto& o : obs) sum += o.value;
    return sum / static_cast<double>(obs.size());
}

Anchor resolve_anchor(const AnchorSpec& spec, const StampedSeries& diff) {
    if (spec.value) return {spec.date, *spec.value};
    const auto [from, to] = *spec.mean_window;
    return {spec.date, mean_level(diff, from, to)};
}

ForecastConfig to_forecast_config(const ForecastSettings& fs, const StampedSeries& visible) {
    ForecastConfig fc;
    fc.mode = fs.mode;
    fc.trend = fs.trend;
    if (fs.pivot) fc.pivot = resolve_anchor(*fs.pivot, visible);
    if (fs.start) fc.start_anchor = resolve_anchor(*fs.start, visible);
    if (fs.end) fc.end_anchor = resolve_anchor(*fs.end, visible);
    fc.mirror_duration = fs.mirror_duration;
    fc.chain_along_trend = fs.chain_along_trend;
    fc.half_period = fs.half_period;
    if (fs.amplitude) fc.amplitude = *fs.amplitude;
    return fc;
}

SegmentationConfig to_segmentation(const RunConfig& cfg) {
    return SegmentationConfig{cfg.k, cfg.min_len, cfg.transition_halfwidth, cfg.fit_from,
                              cfg.tail_transition_from};
}

// ---- subcommands ----------------------------------------------------------

int cmd_diff(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.minuend.empty() || cfg.subtrahend.empty()) {
        throw Error("diff needs a minuend and a subtrahend series");
    }
    const auto headline = load_series(find_series(cfg, cfg.minuend));
    const auto component = load_series(find_series(cfg, cfg.subtrahend));
    for (const auto* s : {&headline, &component}) {
        const auto gaps = s->missing_months();
        if (!gaps.empty()) {
            err << "warning: " << s->series_id() << " has " << gaps.size() << " missing month(s), first "
                << gaps.front().to_string() << "\n";
        }
    }
    const auto diff = difference(headline, component);
    const bool all_zero = std::all_of(diff.observations().begin(), diff.observations().end(),
                                      [](const Observation& o) { return o.value == 0.0; });
    if (all_zero) err << "warning: difference is identically zero (same series given twice?)\n";

    OutputSet files;
    files.add("difference.csv", format_series_csv(diff.observations()));
    files.commit(cfg.out);

    out << "difference " << diff.minuend_id() << " - " << diff.subtrahend_id() << ": " << diff.size()
        << " months, " << diff.front().stamp.to_string() << ".." << diff.back().stamp.to_string() << "\n";
    out << "  " << headline.series_id() << ": " << headline.front().stamp.to_string() << ".."
        << headline.back().stamp.to_string() << ", " << component.series_id() << ": "
        << component.front().stamp.to_string() << ".." << component.back().stamp.to_string() << "\n";
    return 0;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    DifferenceSeries diff = load_difference(cfg);
    if (cfg.fit_from) diff = diff.slice(*cfg.fit_from, diff.back().stamp);
    if (diff.empty()) throw Error("no observations after fit_from");
    std::optional<MonthStamp> tail = cfg.tail_transition_from;
    const DifferenceSeries detect_on = tail ? diff.truncated(tail->plus_months(-1)) : diff;
    const int k = cfg.auto_k ? select_breakpoint_count(detect_on, 3, cfg.min_len) : cfg.k;
    const auto bps = detect_breakpoints(detect_on, k, cfg.min_len);
    const auto model = build_trend_model(diff, bps, cfg.transition_halfwidth, tail);

    std::string residuals = "date,difference,trend,residual,regime\n";
    for (const auto& o : diff.observations()) {
        const auto cls = classify_deviation(model, o.stamp, o.value);
        if (cls.kind == DeviationKind::InTransition) {
            residuals += o.stamp.to_string() + ',' + format_number(o.value) + ",,,transition\n";
            continue;
        }
        const auto& seg = model.segments()[*cls.segment];
        const bool inside = seg.covers(o.stamp);
        residuals += o.stamp.to_string() + ',' + format_number(o.value) + ',' + format_number(seg.predict(o.stamp)) +
                     ',' + format_number(residual(seg, o.stamp, o.value)) + ',' +
                     (inside ? "segment" + std::to_string(*cls.segment + 1) : std::string("outside")) + '\n';
    }

    OutputSet files;
    files.add("trend_model.json", dump(to_json(model)));
    files.add("residuals.csv", residuals);
    files.commit(cfg.out);

    out << "breakpoints (k=" << k << "):";
    for (const auto& b : bps) out << " " << b.to_string();
    out << "\n";
    for (std::size_t i = 0; i < model.segments().size(); ++i) {
        const auto& s = model.segments()[i];
        out << "segment " << i + 1 << ": " << s.start.to_string() << ".." << s.end.to_string()
            << "  slope_B " << fixed(s.slope) << " /yr  R2 " << fixed(s.r_squared, 3).substr(1) << "  sigma "
            << fixed(s.residual_sigma).substr(1) << "\n";
    }
    for (const auto& t : model.transitions()) {
        out << "transition: " << t.start.to_string() << ".." << t.end.to_string() << " (" << t.months()
            << " months)\n";
    }
    const auto latest = classify_deviation(model, diff.back().stamp, diff.back().value);
    out << "latest " << diff.back().stamp.to_string() << ": " << to_string(latest.kind);
    if (latest.z) out << " (z " << fixed(*latest.z) << ")";
    out << "\n";
    return 0;
}

struct ResolvedForecast {
    LinearSegment trend;
    Forecast forecast;
};

long resolve_horizon(const ForecastSettings& fs, MonthStamp origin) {
    if (fs.horizon) return *fs.horizon;
    if (fs.until) return months_between(origin, *fs.until);
    if (fs.deadline) return months_between(origin, *fs.deadline);
    throw Error("forecast needs 'horizon', 'until' or 'deadline'");
}

ResolvedForecast build_forecast(const RunConfig& cfg, const DifferenceSeries& diff, const TrendModel& model) {
    const auto& fs = cfg.forecast;
    const MonthStamp origin = fs.origin ? *fs.origin : diff.back().stamp;
    const auto current_value = diff.at(origin);
    if (!current_value) throw Error("forecast origin " + origin.to_string() + " not in the difference series");
    const Anchor current{origin, *current_value};
    const long horizon = resolve_horizon(fs, origin);
    if (horizon < 1) throw Error("forecast horizon must be at least 1 month");

    const DifferenceSeries visible = diff.truncated(origin);
    const ForecastConfig fc = to_forecast_config(fs, visible);
    if (model.segments().empty()) throw Error("trend model has no segments");

    LinearSegment trend;
    switch (fc.trend) {
    case TrendSource::LastSegment: trend = model.segments().back(); break;
    case TrendSource::Mirror:
        if (!fc.pivot) throw Error("mirror trend needs 'pivot'");
        trend = mirror_trend(model.segments().back(), *fc.pivot, fc.mirror_duration);
        break;
    case TrendSource::Endpoint:
        if (!fc.start_anchor || !fc.end_anchor) throw Error("endpoint trend needs 'start' and 'end'");
        trend = endpoint_trend(*fc.start_anchor, *fc.end_anchor, fs.residual_sigma);
        break;
    case TrendSource::LastValue: trend = LinearSegment{origin, origin.plus_months(1), current.value, 0, 0, 0, true}; break;
    }

    Forecast forecast{ForecastMode::AlongTrend, origin, {}, 0.0};
    switch (fc.mode) {
    case ForecastMode::AlongTrend: forecast = forecast_along_trend(trend, origin, horizon); break;
    case ForecastMode::ReturnToTrend: {
        const MonthStamp deadline = fs.deadline ? *fs.deadline : origin.plus_months(horizon);
        forecast = forecast_return_to_trend(current, trend, deadline);
        if (fc.chain_along_trend && months_between(origin, deadline) < horizon) {
            forecast = chain(forecast, forecast_along_trend(trend, origin, horizon));
        }
        break;
    }
    case ForecastMode::Pendulum: {
        double amplitude = fc.amplitude;
        if (fs.trough_level) amplitude = pendulum_amplitude_for_level(current, trend, fc.half_period, *fs.trough_level);
        if (!fs.amplitude && !fs.trough_level) throw Error("pendulum forecast needs 'amplitude' or 'trough_level'");
        forecast = forecast_pendulum(current, trend, amplitude, fc.half_period, horizon);
        break;
    }
    }
    return {trend, forecast};
}

int cmd_forecast(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto diff = load_difference(cfg);
    const fs::path model_path = cfg.model_path ? *cfg.model_path : cfg.out / "trend_model.json";
    if (!fs::exists(model_path)) throw Error("trend model not found: " + model_path.string());
    TrendModel model = [&] {
        try {
            return trend_model_from_json(json::parse(read_file(model_path)));
        } catch (const json::exception& e) {
            throw Error(model_path.string() + ": " + e.what());
        }
    }();
    const auto calibration = load_calibration(cfg);
    const auto [trend, forecast] = build_forecast(cfg, diff, model);

    OutputSet files;
    files.add("forecast.csv", format_forecast_csv(forecast));
    files.add("forecast.json", dump(to_json(forecast)));
    if (calibration) files.add("forecast_price.csv", format_price_csv(forecast, *calibration));
    files.commit(cfg.out);

    const auto origin_value = *diff.at(forecast.origin);
    out << to_string(forecast.mode) << " from " << forecast.origin.to_string() << " (difference "
        << fixed(origin_value) << "), trend slope_B " << fixed(trend.slope) << " /yr\n";
    if (forecast.mode == ForecastMode::ReturnToTrend) {
        const double deviation = origin_value - trend.predict(forecast.origin);
        const MonthStamp deadline =
            cfg.forecast.deadline ? *cfg.forecast.deadline : forecast.path.back().stamp;
        const double steps = static_cast<double>(months_between(forecast.origin, deadline));
        out << "deviation " << fixed(deviation) << " closed by " << deadline.to_string() << " at "
            << fixed(-deviation / steps) << " per month\n";
    }
    const auto& last = forecast.path.back();
    out << "final " << last.stamp.to_string() << ": " << fixed(last.value);
    if (calibration) out << "  price $" << fixed(index_to_price(*calibration, last.value)).substr(1);
    out << "\n";
    return 0;
}

int cmd_translate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const fs::path forecast_path = cfg.forecast_path ? *cfg.forecast_path : cfg.out / "forecast.json";
    if (!fs::exists(forecast_path)) throw Error("forecast not found: " + forecast_path.string());
    const Forecast forecast = [&] {
        try {
            return forecast_from_json(json::parse(read_file(forecast_path)));
        } catch (const json::exception& e) {
            throw Error(forecast_path.string() + ": " + e.what());
        }
    }();
    if (forecast.path.empty()) throw Error("forecast path is empty");
    if (cfg.minuend.empty() || cfg.subtrahend.empty()) throw Error("translate needs the difference pair");
    const auto headline = load_series(find_series(cfg, cfg.minuend));
    const auto component = load_series(find_series(cfg, cfg.subtrahend));
    const auto calibration = load_calibration(cfg);

    const double rate = cfg.headline_annual_rate
                            ? *cfg.headline_annual_rate
                            : trailing_annual_growth(headline, forecast.origin, cfg.growth_years);
    const auto headline_path =
        extrapolate_headline(headline, forecast.origin, static_cast<long>(forecast.path.size()), rate);
    if (headline_path.back().stamp != forecast.path.back().stamp) {
        throw Error("forecast path has gaps; cannot pair it with the headline extrapolation");
    }
    const auto component_path = component_index_from_difference(headline_path, forecast.path);

    const auto start = component.at(forecast.origin);
    if (!start) throw Error("component has no value at origin " + forecast.origin.to_string());
    const double pct = percent_change(*start, component_path.back().value);

    std::optional<LeadLag> ll;
    if (cfg.lead_lag) {
        const auto& s = *cfg.lead_lag;
        DifferenceSeries leader = difference(load_series(find_series(cfg, s.leader_minuend)),
                                             load_series(find_series(cfg, s.leader_subtrahend)));
        DifferenceSeries follower = difference(headline, component);
        const MonthStamp from = s.from ? *s.from : MonthStamp::from_ordinal(0);
        const MonthStamp to = s.to ? *s.to : MonthStamp(9999, 12);
        ll = lead_lag(leader.slice(from, to), follower.slice(from, to), s.max_lag);
    }

    std::string csv = "date,headline,difference,component\n";
    for (std::size_t i = 0; i < component_path.size(); ++i) {
        csv += component_path[i].stamp.to_string() + ',' + format_number(headline_path[i].value) + ',' +
               format_number(forecast.path[i].value) + ',' + format_number(component_path[i].value) + '\n';
    }
    json summary{{"origin", forecast.origin.to_string()},
                 {"end", component_path.back().stamp.to_string()},
                 {"headline_annual_rate", rate},
                 {"component_start", *start},
                 {"component_end", component_path.back().value},
                 {"percent_change", pct},
                 {"calibration", calibration ? to_json(*calibration) : json(nullptr)},
                 {"lead_lag", ll ? json{{"lag", ll->lag}, {"correlation", ll->correlation}} : json(nullptr)}};
    if (calibration) {
        summary["price_end_usd"] = index_to_price(*calibration, forecast.path.back().value);
    }

    OutputSet files;
    files.add("component_forecast.csv", csv);
    files.add("translate.json", dump(summary));
    files.commit(cfg.out);

    out << component.series_id() << " " << forecast.origin.to_string() << " " << fixed(*start).substr(1) << " -> "
        << component_path.back().stamp.to_string() << " " << fixed(component_path.back().value).substr(1) << ": "
        << fixed(pct, 1) << "% (headline growth " << fixed(rate) << "%/yr)\n";
    if (calibration) {
        out << "price at " << forecast.path.back().stamp.to_string() << ": $"
            << fixed(index_to_price(*calibration, forecast.path.back().value)).substr(1) << " (" << calibration->source
            << ")\n";
    }
    if (ll) {
        out << "lead-lag " << cfg.lead_lag->leader_minuend << "-" << cfg.lead_lag->leader_subtrahend << " vs "
            << cfg.minuend << "-" << cfg.subtrahend << ": lag " << ll->lag << " months, correlation "
            << fixed(ll->correlation, 3) << "\n";
    }
    return 0;
}

int cmd_backtest(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    const auto diff = load_difference(cfg);
    if (cfg.origins.empty()) throw Error("backtest needs at least one origin");
    long horizon = 0;
    if (cfg.backtest_horizon) {
        horizon = *cfg.backtest_horizon;
    } else {
        horizon = resolve_horizon(cfg.forecast, cfg.origins.front());
    }
    if (horizon < 1) throw Error("backtest horizon must be at least 1 month");
    for (const auto& o : cfg.origins) {
        if (months_between(o, diff.back().stamp) < horizon) {
            throw Error("origin " + o.to_string() + " leaves fewer than " + std::to_string(horizon) +
                        " months of actuals");
        }
    }

    // Anchors derived from data are resolved per origin, on data up to that origin.
    auto run_with = [&](ForecastMode mode, TrendSource source) {
        std::vector<BacktestReport> reports;
        for (const auto& o : cfg.origins) {
            BacktestConfig bc{to_segmentation(cfg), to_forecast_config(cfg.forecast, diff.truncated(o))};
            bc.forecast.mode = mode;
            bc.forecast.trend = source;
            if (cfg.forecast.deadline) bc.forecast.deadline_months = months_between(cfg.origins.front(), *cfg.forecast.deadline);
            const MonthStamp one[] = {o};
            auto r = rolling_backtest(diff, bc, one, horizon);
            reports.push_back(r.front());
        }
        return reports;
    };
    const auto reports = run_with(cfg.forecast.mode, cfg.forecast.trend);
    std::optional<std::vector<BacktestReport>> baseline;
    if (cfg.baseline) baseline = run_with(cfg.baseline->mode, cfg.baseline->trend);

    json doc{{"horizon", horizon}, {"reports", json::array()}};
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    if (baseline) {
        doc["baseline"] = json::array();
        for (const auto& r : *baseline) doc["baseline"].push_back(to_json(r));
    }

    OutputSet files;
    files.add("backtest.csv", format_reports_csv(reports));
    files.add("backtest.json", dump(doc));
    if (baseline) files.add("backtest_baseline.csv", format_reports_csv(*baseline));
    files.commit(cfg.out);

    out << "origin   n      mae     rmse     bias  hit_rate\n";
    auto row = [&](const BacktestReport& r, const char* tag) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s %3zu %8.3f %8.3f %8.3f %9.3f%s\n", r.origin->to_string().c_str(), r.n,
                      r.mae, r.rmse, r.bias, r.direction_hit_rate, tag);
        out << buf;
    };
    for (const auto& r : reports) row(r, "");
    if (baseline) {
        for (const auto& r : *baseline) row(r, "  (baseline)");
    }
    return 0;
}

int cmd_fetch(const RunConfig& cfg, const std::vector<std::string>& ids, int start_year, int end_year,
              const std::optional<std::string>& key, bool refresh, std::ostream& out) {
    if (ids.empty()) throw Error("fetch needs at least one --series id");
    if (end_year < start_year) throw Error("--end-year precedes --start-year");
    const std::string base = api_base_from_env();
    OutputSet files;
    for (const auto& id : ids) {
        const fs::path target = cfg.out / (id + ".csv");
        if (!refresh && fs::exists(target)) {
            out << id << ": cached at " << target.string() << "\n";
            continue;
        }
        const auto series = fetch_series({id, start_year, end_year, key}, base);
        files.add(id + ".csv", format_series_csv(series.observations()));
        out << id << ": " << series.size() << " months, " << series.front().stamp.to_string() << ".."
            << series.back().stamp.to_string() << "\n";
    }
    files.commit(cfg.out);
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trend/deviation decomposition of price-index differences"};
    app.require_subcommand(1);

    struct Common {
        std::optional<std::string> config;
        std::optional<std::string> out;
    };
    std::map<std::string, Common> common;
    auto add_common = [&](CLI::App* sub) {
        auto& c = common[sub->get_name()];
        sub->add_option("--config", c.config, "JSON run configuration");
        sub->add_option("--out", c.out, "output directory");
    };

    std::optional<std::string> headline_path, component_path, diff_path, model_path, forecast_path, pairs_path;
    std::optional<std::string> fit_from, tail_from, mode, origin, deadline, until, calibration, k_flag;
    std::optional<long> min_len, halfwidth, horizon;
    std::optional<double> annual_rate;
    std::vector<std::string> origins;
    std::vector<std::string> fetch_ids;
    int start_year = 1980;
    int end_year = 2010;
    std::optional<std::string> key;
    bool refresh = false;

    auto* diff = app.add_subcommand("diff", "headline - component difference series");
    add_common(diff);
    diff->add_option("--headline", headline_path, "headline series CSV");
    diff->add_option("--component", component_path, "component series CSV");

    auto* fit = app.add_subcommand("fit", "segment the difference and fit linear trends");
    add_common(fit);
    fit->add_option("--diff", diff_path, "difference CSV");
    fit->add_option("--k", k_flag, "breakpoint count or 'auto'");
    fit->add_option("--min-len", min_len, "minimum segment length in months");
    fit->add_option("--halfwidth", halfwidth, "transition half-width in months");
    fit->add_option("--fit-from", fit_from, "first month used for fitting");
    fit->add_option("--tail-transition-from", tail_from, "start of an ongoing transition");

    auto* forecast = app.add_subcommand("forecast", "forecast the difference path");
    add_common(forecast);
    forecast->add_option("--diff", diff_path, "difference CSV");
    forecast->add_option("--model", model_path, "trend model JSON");
    forecast->add_option("--mode", mode, "along-trend | return-to-trend | pendulum");
    forecast->add_option("--origin", origin, "forecast origin YYYY-MM");
    forecast->add_option("--deadline", deadline, "return-to-trend deadline YYYY-MM");
    forecast->add_option("--horizon", horizon, "months to forecast");
    forecast->add_option("--until", until, "last forecast month YYYY-MM");
    forecast->add_option("--calibration", calibration, "none | heuristic | fitted");
    forecast->add_option("--pairs", pairs_path, "index,price_usd CSV for a fitted calibration");

    auto* translate = app.add_subcommand("translate", "difference forecast to component index and prices");
    add_common(translate);
    translate->add_option("--forecast", forecast_path, "forecast JSON");
    translate->add_option("--annual-rate", annual_rate, "headline growth in percent per year");
    translate->add_option("--calibration", calibration, "none | heuristic | fitted");
    translate->add_option("--pairs", pairs_path, "index,price_usd CSV for a fitted calibration");

    auto* backtest = app.add_subcommand("backtest", "score forecasts against realised differences");
    add_common(backtest);
    backtest->add_option("--diff", diff_path, "difference CSV");
    backtest->add_option("--origins", origins, "forecast origins YYYY-MM")->delimiter(',');
    backtest->add_option("--horizon", horizon, "months scored per origin");

    auto* fetch = app.add_subcommand("fetch", "download series from the statistics API");
    add_common(fetch);
    fetch->add_option("--series", fetch_ids, "series id (repeatable)");
    fetch->add_option("--start-year", start_year, "first year");
    fetch->add_option("--end-year", end_year, "last year");
    fetch->add_option("--key", key, "API registration key");
    fetch->add_flag("--refresh", refresh, "ignore cached files");

    std::vector<const char*> argv;
    argv.push_back("trendgap");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    CLI::App* active = app.get_subcommands().front();
    const std::string name = active->get_name();
    const auto& c = common[name];

    try {
        RunConfig cfg = c.config ? load_run_config(*c.config) : RunConfig{};
        if (c.out) cfg.out = *c.out;

        auto set_series = [&](const std::optional<std::string>& path, std::string& role) {
            if (!path) return;
            const std::string id = fs::path(*path).stem().string();
            cfg.series.erase(std::remove_if(cfg.series.begin(), cfg.series.end(),
                                            [&](const SeriesSpec& s) { return s.id == id; }),
                             cfg.series.end());
            cfg.series.push_back({id, *path, {}});
            role = id;
        };
        set_series(headline_path, cfg.minuend);
        set_series(component_path, cfg.subtrahend);
        if (diff_path) cfg.difference_path = *diff_path;
        if (model_path) cfg.model_path = *model_path;
        if (forecast_path) cfg.forecast_path = *forecast_path;
        if (k_flag) {
            if (*k_flag == "auto") {
                cfg.auto_k = true;
            } else {
                try {
                    cfg.k = std::stoi(*k_flag);
                    cfg.auto_k = false;
                } catch (const std::exception&) {
                    throw Error("--k must be an integer or 'auto'");
                }
            }
        }
        if (min_len) cfg.min_len = *min_len;
        if (halfwidth) cfg.transition_halfwidth = *halfwidth;
        if (fit_from) cfg.fit_from = MonthStamp::parse(*fit_from);
        if (tail_from) cfg.tail_transition_from = MonthStamp::parse(*tail_from);
        if (mode) cfg.forecast.mode = parse_forecast_mode(*mode);
        if (origin) cfg.forecast.origin = MonthStamp::parse(*origin);
        if (deadline) cfg.forecast.deadline = MonthStamp::parse(*deadline);
        if (until) cfg.forecast.until = MonthStamp::parse(*until);
        if (horizon) {
            if (name == "backtest") {
                cfg.backtest_horizon = *horizon;
            } else {
                cfg.forecast.horizon = *horizon;
            }
        }
        if (calibration) cfg.calibration = parse_calibration_kind(*calibration);
        if (pairs_path) cfg.pairs_path = *pairs_path;
        if (annual_rate) cfg.headline_annual_rate = *annual_rate;
        if (!origins.empty()) {
            cfg.origins.clear();
            for (const auto& o : origins) cfg.origins.push_back(MonthStamp::parse(o));
        }

        if (name == "diff") return cmd_diff(cfg, out, err);
        if (name == "fit") return cmd_fit(cfg, out, err);
        if (name == "forecast") return cmd_forecast(cfg, out, err);
        if (name == "translate") return cmd_translate(cfg, out, err);
        if (name == "backtest") return cmd_backtest(cfg, out, err);
        if (name == "fetch") return cmd_fetch(cfg, fetch_ids, start_year, end_year, key, refresh, out);
        err << "error: unknown command " << name << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace trendgap::cli
