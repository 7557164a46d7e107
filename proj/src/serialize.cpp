#include "trendgap/serialize.hpp"

#include "trendgap/error.hpp"
#include "trendgap/format.hpp"

#include <algorithm>

namespace trendgap {

using nlohmann::json;

json to_json(const LinearSegment& s) {
    return json{{"start", s.start.to_string()}, {"end", s.end.to_string()},
                {"intercept_A", s.intercept},   {"slope_B", s.slope},
                {"r_squared", s.r_squared},     {"residual_sigma", s.residual_sigma}};
}

json to_json(const TrendModel& model) {
    json segments = json::array();
    for (const auto& s : model.segments()) segments.push_back(to_json(s));
    json transitions = json::array();
    for (const auto& t : model.transitions()) {
        transitions.push_back({{"start", t.start.to_string()}, {"end", t.end.to_string()}});
    }
    return json{{"segments", segments}, {"transitions", transitions}};
}

json to_json(const Forecast& f) {
    json path = json::array();
    for (const auto& o : f.path) path.push_back({{"date", o.stamp.to_string()}, {"predicted", o.value}});
    return json{{"mode", to_string(f.mode)}, {"origin", f.origin.to_string()},
                {"band_sigma", f.band_sigma}, {"path", path}};
}

json to_json(const BacktestReport& r) {
    return json{{"origin", r.origin ? json(r.origin->to_string()) : json(nullptr)},
                {"n", r.n},
                {"mae", r.mae},
                {"rmse", r.rmse},
                {"bias", r.bias},
                {"direction_hit_rate", r.direction_hit_rate}};
}

json to_json(const PriceCalibration& c) {
    return json{{"alpha", c.alpha}, {"beta", c.beta},
                {"fit_r_squared", c.fit_r_squared ? json(*c.fit_r_squared) : json(nullptr)},
                {"source", c.source}};
}

namespace {

template <typename T>
T field(const json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name)) throw Error(std::string("missing field '") + name + "'");
    try {
        return doc.at(name).get<T>();
    } catch (const json::exception&) {
        throw Error(std::string("field '") + name + "' has the wrong type");
    }
}

} // namespace

TrendModel trend_model_from_json(const json& doc) {
    std::vector<LinearSegment> segments;
    for (const auto& s : field<json>(doc, "segments")) {
        segments.push_back({MonthStamp::parse(field<std::string>(s, "start")),
                            MonthStamp::parse(field<std::string>(s, "end")),
                            field<double>(s, "intercept_A"), field<double>(s, "slope_B"),
                            field<double>(s, "r_squared"), field<double>(s, "residual_sigma"), false});
    }
    std::vector<TransitionWindow> transitions;
    for (const auto& t : field<json>(doc, "transitions")) {
        transitions.push_back({MonthStamp::parse(field<std::string>(t, "start")),
                               MonthStamp::parse(field<std::string>(t, "end"))});
    }
    return TrendModel(std::move(segments), std::move(transitions));
}

PriceCalibration calibration_from_json(const json& doc) {
    PriceCalibration c;
    c.alpha = field<double>(doc, "alpha");
    c.beta = field<double>(doc, "beta");
    if (doc.contains("fit_r_squared") && !doc.at("fit_r_squared").is_null()) {
        c.fit_r_squared = field<double>(doc, "fit_r_squared");
    }
    c.source = field<std::string>(doc, "source");
    return c;
}

Forecast forecast_from_json(const json& doc) {
    Forecast f{parse_forecast_mode(field<std::string>(doc, "mode")),
               MonthStamp::parse(field<std::string>(doc, "origin")), {}, field<double>(doc, "band_sigma")};
    for (const auto& o : field<json>(doc, "path")) {
        f.path.push_back({MonthStamp::parse(field<std::string>(o, "date")), field<double>(o, "predicted")});
    }
    StampedSeries check(f.path); // stamps strictly increasing, values finite
    if (!f.path.empty() && !(f.origin < f.path.front().stamp)) throw Error("forecast path starts before its origin");
    return f;
}

std::string format_forecast_csv(const Forecast& f) {
    std::string out = "date,predicted,low,high\n";
    for (const auto& o : f.path) {
        out += o.stamp.to_string() + ',' + format_number(o.value) + ',' +
               format_number(o.value - f.band_sigma) + ',' + format_number(o.value + f.band_sigma) + '\n';
    }
    return out;
}

std::string format_price_csv(const Forecast& f, const PriceCalibration& cal) {
    std::string out = "date,price_usd,low_usd,high_usd\n";
    for (const auto& o : f.path) {
        const double a = index_to_price(cal, o.value - f.band_sigma);
        const double b = index_to_price(cal, o.value + f.band_sigma);
        out += o.stamp.to_string() + ',' + format_number(index_to_price(cal, o.value)) + ',' +
               format_number(std::min(a, b)) + ',' + format_number(std::max(a, b)) + '\n';
    }
    return out;
}

std::string format_reports_csv(std::span<const BacktestReport> reports) {
    std::string out = "origin,n,mae,rmse,bias,hit_rate\n";
    for (const auto& r : reports) {
        out += (r.origin ? r.origin->to_string() : std::string()) + ',' + std::to_string(r.n) + ',' +
               format_number(r.mae) + ',' + format_number(r.rmse) + ',' + format_number(r.bias) + ',' +
               format_number(r.direction_hit_rate) + '\n';
    }
    return out;
}

std::string dump(const json& doc) { return doc.dump(2) + '\n'; }

} // namespace trendgap
