#pragma once

#include "trendgap/series.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace trendgap {

inline constexpr const char* kDefaultApiBase = "https://api.bls.gov/publicAPI/v2";
inline constexpr const char* kApiBaseEnv = "TRENDGAP_API_BASE";

/// TRENDGAP_API_BASE if set and non-empty, else the public v2 endpoint.
std::string api_base_from_env();

/// Monthly observations from a v2 `timeseries/data` JSON response. Annual
/// averages (M13) and unavailable values are skipped.
MonthlySeries parse_timeseries_response(std::string_view body, const std::string& series_id);

struct FetchRequest {
    std::string series_id;
    int start_year = 0;
    int end_year = 0;
    std::optional<std::string> registration_key;
};

/// GETs `<base>/timeseries/data/<id>` in ten-year chunks and merges the result.
MonthlySeries fetch_series(const FetchRequest& request, const std::string& api_base);

} // namespace trendgap
