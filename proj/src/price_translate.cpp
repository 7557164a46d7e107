#include "trendgap/price_translate.hpp"

#include "trendgap/error.hpp"
#include "trendgap/segment_fit.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

namespace trendgap {

PriceCalibration crude_difference_heuristic() {
    return PriceCalibration{-1.0, 0.0, std::nullopt, "heuristic"};
}

double percent_change(double index_start, double index_end) {
    if (!(index_start > 0.0)) throw Error("percent change needs a positive starting index");
    return 100.0 * (index_end - index_start) / index_start;
}

std::vector<Observation> component_index_from_difference(std::span<const Observation> headline_path,
                                                         std::span<const Observation> difference_path) {
    if (headline_path.size() != difference_path.size()) {
        throw Error("headline and difference paths cover different months");
    }
    std::vector<Observation> out;
    out.reserve(headline_path.size());
    for (std::size_t i = 0; i < headline_path.size(); ++i) {
        if (headline_path[i].stamp != difference_path[i].stamp) {
            throw Error("stamp mismatch at " + headline_path[i].stamp.to_string() + " vs " +
                        difference_path[i].stamp.to_string());
        }
        out.push_back({headline_path[i].stamp, headline_path[i].value - difference_path[i].value});
    }
    return out;
}

std::vector<Observation> extrapolate_headline(const MonthlySeries& series, MonthStamp origin,
                                              long horizon, double annual_rate) {
    const auto start = series.at(origin);
    if (!start) throw Error("headline origin " + origin.to_string() + " not in series");
    if (!std::isfinite(annual_rate)) throw Error("annual growth rate must be finite");
    if (horizon < 1) throw Error("horizon must be at least 1 month");
    const double base = 1.0 + annual_rate / 100.0;
    if (!(base > 0.0)) throw Error("annual growth rate must exceed -100%");
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (long m = 1; m <= horizon; ++m) {
        out.push_back({origin.plus_months(m), *start * std::pow(base, static_cast<double>(m) / 12.0)});
    }
    return out;
}

double trailing_annual_growth(const MonthlySeries& series, MonthStamp origin, int years) {
    if (years < 1) throw Error("growth window must be at least one year");
    const auto end = series.at(origin);
    const MonthStamp from = origin.plus_months(-12L * years);
    const auto begin = series.at(from);
    if (!end || !begin) {
        throw Error("headline lacks " + from.to_string() + " or " + origin.to_string() +
                    " for trailing growth");
    }
    if (!(*begin > 0.0 && *end > 0.0)) throw Error("trailing growth needs positive index levels");
    return 100.0 * (std::pow(*end / *begin, 1.0 / years) - 1.0);
}

PriceCalibration calibrate_price(std::span<const PricePair> pairs) {
    std::set<double> distinct;
    std::vector<double> x, y;
    for (const auto& p : pairs) {
        if (!std::isfinite(p.index) || !std::isfinite(p.price_usd)) throw Error("non-finite calibration pair");
        distinct.insert(p.index);
        x.push_back(p.index);
        y.push_back(p.price_usd);
    }
    if (distinct.size() < 2) throw Error("calibration needs at least 2 distinct index values");
    const LineFit fit = fit_line(x, y);
    return PriceCalibration{fit.slope, fit.intercept, fit.r_squared, "fitted"};
}

std::vector<PricePair> parse_price_pairs_csv(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    std::vector<PricePair> out;
    std::size_t line_no = 0;
    bool header = false;
    auto number = [&](std::string_view tok) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
            throw Error("line " + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
        }
        return v;
    };
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!header) {
            if (line != "index,price_usd") throw Error("line 1: expected header 'index,price_usd'");
            header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) {
            throw Error("line " + std::to_string(line_no) + ": expected 'index,price_usd'");
        }
        out.push_back({number(line.substr(0, comma)), number(line.substr(comma + 1))});
    }
    if (out.empty()) throw Error("no calibration pairs");
    return out;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

LeadLag best_lag(std::span<const Observation> a, const StampedSeries& b, long max_lag) {
    if (max_lag < 0) throw Error("max_lag must be non-negative");
    LeadLag best{0, -2.0};
    // 0, +1, -1, +2, -2, ... so the first maximum found has the smallest |lag|.
    for (long step = 0; step <= 2 * max_lag; ++step) {
        const long lag = (step % 2 == 1) ? (step + 1) / 2 : -(step / 2);
        std::vector<double> x, y;
        for (const auto& o : a) {
            if (auto v = b.at(o.stamp.plus_months(lag))) {
                x.push_back(o.value);
                y.push_back(*v);
            }
        }
        if (x.size() < kMinLeadLagOverlap) {
            throw Error("insufficient overlap at lag " + std::to_string(lag) + ": " +
                        std::to_string(x.size()) + " months");
        }
        const double r = pearson(x, y);
        if (r > best.correlation) best = {lag, r};
    }
    return best;
}

std::vector<Observation> detrend(const StampedSeries& s) {
    std::vector<double> x, y;
    for (const auto& o : s.observations()) {
        x.push_back(static_cast<double>(o.stamp.ordinal()));
        y.push_back(o.value);
    }
    const LineFit fit = fit_line(x, y);
    std::vector<Observation> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.push_back({s.observations()[i].stamp, y[i] - (fit.intercept + fit.slope * x[i])});
    }
    return out;
}

} // namespace

LeadLag lead_lag(const StampedSeries& a, const StampedSeries& b, long max_lag) {
    return best_lag(a.observations(), b, max_lag);
}

LeadLag lead_lag_detrended(const StampedSeries& a, const StampedSeries& b, long max_lag) {
    const auto da = detrend(a);
    const StampedSeries db(detrend(b));
    return best_lag(da, db, max_lag);
}

} // namespace trendgap
