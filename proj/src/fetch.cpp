#include "trendgap/fetch.hpp"

#include "trendgap/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>

namespace trendgap {

namespace {

constexpr int kYearsPerRequest = 10;

struct BaseUrl {
    std::string scheme_host_port;
    std::string path;
};

BaseUrl split_base(const std::string& base) {
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) throw Error("API base '" + base + "' lacks a scheme");
    const auto path_start = base.find('/', scheme_end + 3);
    BaseUrl out;
    out.scheme_host_port = base.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : base.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

} // namespace

std::string api_base_from_env() {
    const char* env = std::getenv(kApiBaseEnv);
    if (env != nullptr && *env != '\0') return env;
    return kDefaultApiBase;
}

MonthlySeries parse_timeseries_response(std::string_view body, const std::string& series_id) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed API response: ") + e.what());
    }
    const auto status = doc.value("status", std::string{});
    if (status != "REQUEST_SUCCEEDED") {
        std::string msg = "API request failed (" + status + ")";
        if (doc.contains("message") && doc["message"].is_array()) {
            for (const auto& m : doc["message"]) msg += ": " + m.get<std::string>();
        }
        throw Error(msg);
    }
    const auto& series = doc.at("Results").at("series");
    const nlohmann::json* match = nullptr;
    for (const auto& s : series) {
        if (s.value("seriesID", std::string{}) == series_id) match = &s;
    }
    if (match == nullptr) throw Error("series " + series_id + " missing from API response");

    std::map<MonthStamp, double> values;
    for (const auto& row : match->at("data")) {
        const auto period = row.at("period").get<std::string>();
        if (period.size() != 3 || period[0] != 'M' || period == "M13") continue;
        const auto value_text = row.at("value").get<std::string>();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{} || ptr != value_text.data() + value_text.size() || !std::isfinite(value)) {
            continue; // "-" marks an unavailable month
        }
        const int year = std::stoi(row.at("year").get<std::string>());
        const int month = std::stoi(period.substr(1));
        values[MonthStamp(year, month)] = value;
    }
    std::vector<Observation> obs;
    for (const auto& [stamp, v] : values) obs.push_back({stamp, v});
    return MonthlySeries(series_id, std::move(obs));
}

MonthlySeries fetch_series(const FetchRequest& request, const std::string& api_base) {
    if (request.series_id.empty()) throw Error("series id required");
    if (request.end_year < request.start_year) throw Error("end year precedes start year");
    const BaseUrl base = split_base(api_base);

    httplib::Client client(base.scheme_host_port);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);

    std::map<MonthStamp, double> merged;
    for (int from = request.start_year; from <= request.end_year; from += kYearsPerRequest) {
        const int to = std::min(request.end_year, from + kYearsPerRequest - 1);
        std::string path = base.path + "/timeseries/data/" + request.series_id +
                           "?startyear=" + std::to_string(from) + "&endyear=" + std::to_string(to);
        if (request.registration_key) path += "&registrationkey=" + *request.registration_key;
        auto res = client.Get(path);
        if (!res) {
            throw Error("request to " + base.scheme_host_port + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) throw Error("API returned HTTP " + std::to_string(res->status));
        const auto chunk = parse_timeseries_response(res->body, request.series_id);
        for (const auto& o : chunk.observations()) merged[o.stamp] = o.value;
    }
    if (merged.empty()) throw Error("API returned no monthly observations for " + request.series_id);
    std::vector<Observation> obs;
    for (const auto& [stamp, v] : merged) obs.push_back({stamp, v});
    return MonthlySeries(request.series_id, std::move(obs));
}

} // namespace trendgap
