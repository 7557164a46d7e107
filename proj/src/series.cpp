#include "trendgap/series.hpp"

#include "trendgap/error.hpp"
#include "trendgap/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace trendgap {

namespace {

void check_observations(const std::vector<Observation>& obs) {
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (!std::isfinite(obs[i].value)) {
            throw Error("non-finite value at " + obs[i].stamp.to_string());
        }
        if (i > 0 && !(obs[i - 1].stamp < obs[i].stamp)) {
            throw Error("stamps not strictly increasing at " + obs[i].stamp.to_string());
        }
    }
}

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::string at_line(std::size_t line_no, const std::string& msg) {
    return "line " + std::to_string(line_no) + ": " + msg;
}

} // namespace

StampedSeries::StampedSeries(std::vector<Observation> observations)
    : observations_(std::move(observations)) {
    check_observations(observations_);
}

std::optional<double> StampedSeries::at(MonthStamp stamp) const {
    auto it = std::lower_bound(observations_.begin(), observations_.end(), stamp,
                               [](const Observation& o, MonthStamp s) { return o.stamp < s; });
    if (it == observations_.end() || it->stamp != stamp) return std::nullopt;
    return it->value;
}

std::vector<double> StampedSeries::values() const {
    std::vector<double> out;
    out.reserve(observations_.size());
    for (const auto& o : observations_) out.push_back(o.value);
    return out;
}

std::vector<MonthStamp> StampedSeries::missing_months() const {
    std::vector<MonthStamp> gaps;
    for (std::size_t i = 1; i < observations_.size(); ++i) {
        for (long k = observations_[i - 1].stamp.ordinal() + 1; k < observations_[i].stamp.ordinal();
             ++k) {
            gaps.push_back(MonthStamp::from_ordinal(k));
        }
    }
    return gaps;
}

std::vector<Observation> StampedSeries::window(MonthStamp first, MonthStamp last) const {
    std::vector<Observation> out;
    for (const auto& o : observations_) {
        if (first <= o.stamp && o.stamp <= last) out.push_back(o);
    }
    return out;
}

MonthlySeries::MonthlySeries(std::string series_id, std::vector<Observation> observations,
                             std::string base_note)
    : StampedSeries(std::move(observations)),
      series_id_(std::move(series_id)),
      base_note_(std::move(base_note)) {}

DifferenceSeries::DifferenceSeries(std::string minuend_id, std::string subtrahend_id,
                                   std::vector<Observation> observations)
    : StampedSeries(std::move(observations)),
      minuend_id_(std::move(minuend_id)),
      subtrahend_id_(std::move(subtrahend_id)) {}

DifferenceSeries DifferenceSeries::slice(MonthStamp first, MonthStamp last) const {
    return DifferenceSeries(minuend_id_, subtrahend_id_, window(first, last));
}

DifferenceSeries DifferenceSeries::truncated(MonthStamp last) const {
    std::vector<Observation> out;
    for (const auto& o : observations_) {
        if (o.stamp <= last) out.push_back(o);
    }
    return DifferenceSeries(minuend_id_, subtrahend_id_, std::move(out));
}

MonthlySeries parse_series_csv(std::string_view text, std::string series_id) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::map<MonthStamp, std::pair<double, std::size_t>> rows;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = trim_cr(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        if (!header_seen) {
            if (line != "date,value") {
                throw Error(at_line(line_no, "expected header 'date,value'"));
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw Error(at_line(line_no, "expected two fields 'date,value'"));
        }
        MonthStamp stamp(2000, 1);
        try {
            stamp = MonthStamp::parse(line.substr(0, comma));
        } catch (const Error& e) {
            throw Error(at_line(line_no, e.what()));
        }
        std::string_view token = line.substr(comma + 1);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
            throw Error(at_line(line_no, "non-numeric value '" + std::string(token) + "'"));
        }
        if (!std::isfinite(value)) {
            throw Error(at_line(line_no, "non-finite value '" + std::string(token) + "'"));
        }
        auto [it, inserted] = rows.emplace(stamp, std::make_pair(value, line_no));
        if (!inserted) {
            throw Error(at_line(line_no, "duplicate month " + stamp.to_string() + " (first on line " +
                                             std::to_string(it->second.second) + ")"));
        }
    }
    if (!header_seen) throw Error("line 1: expected header 'date,value'");
    if (rows.empty()) throw Error("empty series");

    std::vector<Observation> obs;
    obs.reserve(rows.size());
    for (const auto& [stamp, row] : rows) obs.push_back({stamp, row.first});
    return MonthlySeries(std::move(series_id), std::move(obs));
}

std::string format_series_csv(std::span<const Observation> observations) {
    std::string out = "date,value\n";
    for (const auto& o : observations) {
        out += o.stamp.to_string();
        out += ',';
        out += format_number(o.value);
        out += '\n';
    }
    return out;
}

std::pair<MonthlySeries, MonthlySeries> align(const MonthlySeries& a, const MonthlySeries& b) {
    if (a.empty() || b.empty()) throw Error("cannot align an empty series");
    std::vector<Observation> out_a;
    std::vector<Observation> out_b;
    auto ia = a.observations().begin();
    auto ib = b.observations().begin();
    while (ia != a.observations().end() && ib != b.observations().end()) {
        if (ia->stamp < ib->stamp) {
            ++ia;
        } else if (ib->stamp < ia->stamp) {
            ++ib;
        } else {
            out_a.push_back(*ia++);
            out_b.push_back(*ib++);
        }
    }
    if (out_a.empty()) throw Error("no overlapping months");
    return {MonthlySeries(a.series_id(), std::move(out_a), a.base_note()),
            MonthlySeries(b.series_id(), std::move(out_b), b.base_note())};
}

DifferenceSeries difference(const MonthlySeries& headline, const MonthlySeries& component) {
    auto [h, c] = align(headline, component);
    std::vector<Observation> obs;
    obs.reserve(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        obs.push_back({h.observations()[i].stamp,
                       h.observations()[i].value - c.observations()[i].value});
    }
    return DifferenceSeries(headline.series_id(), component.series_id(), std::move(obs));
}

MonthlySeries rebase(const MonthlySeries& series, MonthStamp anchor, double anchor_value) {
    auto current = series.at(anchor);
    if (!current) throw Error("anchor month " + anchor.to_string() + " absent from series");
    if (*current == 0.0) throw Error("zero value at anchor month " + anchor.to_string());
    const double scale = anchor_value / *current;
    std::vector<Observation> obs;
    obs.reserve(series.size());
    for (const auto& o : series.observations()) {
        obs.push_back({o.stamp, o.stamp == anchor ? anchor_value : o.value * scale});
    }
    return MonthlySeries(series.series_id(), std::move(obs), series.base_note());
}

} // namespace trendgap
