#pragma once

#include "trendgap/backtest.hpp"
#include "trendgap/price_translate.hpp"
#include "trendgap/segment_fit.hpp"
#include "trendgap/trend_forecast.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace trendgap {

nlohmann::json to_json(const LinearSegment& segment);
nlohmann::json to_json(const TrendModel& model);
nlohmann::json to_json(const Forecast& forecast);
nlohmann::json to_json(const BacktestReport& report);
nlohmann::json to_json(const PriceCalibration& calibration);

TrendModel trend_model_from_json(const nlohmann::json& doc);
PriceCalibration calibration_from_json(const nlohmann::json& doc);
Forecast forecast_from_json(const nlohmann::json& doc);

/// `date,predicted,low,high` with low/high = predicted -/+ band_sigma.
std::string format_forecast_csv(const Forecast& forecast);

/// `date,price_usd,low_usd,high_usd`, mapping the forecast band through `cal`.
std::string format_price_csv(const Forecast& forecast, const PriceCalibration& cal);

/// `origin,n,mae,rmse,bias,hit_rate`, one row per report.
std::string format_reports_csv(std::span<const BacktestReport> reports);

/// Pretty JSON with a trailing newline.
std::string dump(const nlohmann::json& doc);

} // namespace trendgap
