#pragma once

#include "trendgap/backtest.hpp"
#include "trendgap/month.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace trendgap::cli {

namespace fs = std::filesystem;

struct SeriesSpec {
    std::string id;
    fs::path path;
    std::string base_note;
};

/// A trend anchor given either as a level or as the mean of the difference
/// series over a window.
struct AnchorSpec {
    MonthStamp date{2000, 1};
    std::optional<double> value;
    std::optional<std::pair<MonthStamp, MonthStamp>> mean_window;
};

struct ForecastSettings {
    ForecastMode mode = ForecastMode::AlongTrend;
    TrendSource trend = TrendSource::LastSegment;
    std::optional<AnchorSpec> start;
    std::optional<AnchorSpec> end;
    std::optional<AnchorSpec> pivot;
    long mirror_duration = 84;
    std::optional<MonthStamp> origin;
    std::optional<MonthStamp> deadline;
    std::optional<long> horizon;
    std::optional<MonthStamp> until;
    bool chain_along_trend = true;
    std::optional<double> amplitude;
    std::optional<double> trough_level;
    long half_period = 6;
    double residual_sigma = 0.0; ///< band for endpoint trends
};

enum class CalibrationKind { None, Heuristic, Fitted };

struct LeadLagSettings {
    std::string leader_minuend;
    std::string leader_subtrahend;
    long max_lag = 12;
    std::optional<MonthStamp> from;
    std::optional<MonthStamp> to;
};

struct BaselineSettings {
    ForecastMode mode = ForecastMode::AlongTrend;
    TrendSource trend = TrendSource::LastSegment;
};

struct RunConfig {
    std::vector<SeriesSpec> series;
    std::string minuend;
    std::string subtrahend;
    std::optional<fs::path> difference_path;
    std::optional<fs::path> model_path;
    std::optional<fs::path> forecast_path;

    int k = 1;
    bool auto_k = false;
    long min_len = kDefaultMinSegmentMonths;
    long transition_halfwidth = kDefaultTransitionHalfwidth;
    std::optional<MonthStamp> fit_from;
    std::optional<MonthStamp> tail_transition_from;

    ForecastSettings forecast;

    CalibrationKind calibration = CalibrationKind::None;
    std::optional<fs::path> pairs_path;

    std::optional<double> headline_annual_rate;
    int growth_years = 5;
    std::optional<LeadLagSettings> lead_lag;

    std::vector<MonthStamp> origins;
    std::optional<long> backtest_horizon;
    std::optional<BaselineSettings> baseline;

    fs::path out = "out";
};

/// Reads a JSON RunConfig. Relative paths resolve against the file's directory.
RunConfig load_run_config(const fs::path& path);

/// Entry point shared by the executable and the tests. Returns the exit code:
/// 0 success, 1 internal error, 2 invalid input or configuration.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace trendgap::cli
