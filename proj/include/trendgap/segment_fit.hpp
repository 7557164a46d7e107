#pragma once

#include "trendgap/month.hpp"
#include "trendgap/series.hpp"

#include <optional>
#include <span>
#include <vector>

namespace trendgap {

/// Least-squares line y = intercept + slope * x.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;      ///< 0 when y has zero variance
    double residual_sigma = 0.0; ///< sample standard deviation of residuals
    double sse = 0.0;
};

/// OLS of y on x. Needs at least two points and non-constant x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// A fitted (or constructed) linear trend over an inclusive month window.
/// Slope is in index points per year; intercept is the value at `start`.
struct LinearSegment {
    MonthStamp start;
    MonthStamp end;
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
    double residual_sigma = 0.0;
    /// True for trends drawn rather than fitted (mirror, endpoint).
    bool synthetic = false;

    double predict(MonthStamp stamp) const {
        return intercept + slope * (static_cast<double>(months_between(start, stamp)) / 12.0);
    }
    bool covers(MonthStamp stamp) const { return start <= stamp && stamp <= end; }

    friend bool operator==(const LinearSegment&, const LinearSegment&) = default;
};

struct TransitionWindow {
    MonthStamp start;
    MonthStamp end;

    long months() const { return months_between(start, end) + 1; }
    bool covers(MonthStamp stamp) const { return start <= stamp && stamp <= end; }

    friend bool operator==(const TransitionWindow&, const TransitionWindow&) = default;
};

inline constexpr long kMaxTransitionMonths = 36;
inline constexpr long kDefaultMinSegmentMonths = 60;
inline constexpr long kDefaultTransitionHalfwidth = 12;

/// Chronological segments separated by transition windows.
class TrendModel {
public:
    TrendModel(std::vector<LinearSegment> segments, std::vector<TransitionWindow> transitions,
               long max_transition_months = kMaxTransitionMonths);

    const std::vector<LinearSegment>& segments() const { return segments_; }
    const std::vector<TransitionWindow>& transitions() const { return transitions_; }

    friend bool operator==(const TrendModel&, const TrendModel&) = default;

private:
    std::vector<LinearSegment> segments_;
    std::vector<TransitionWindow> transitions_;
};

/// OLS over the observations in [first, last]. The window must be gap-free.
LinearSegment fit_ols(const DifferenceSeries& diff, MonthStamp first, MonthStamp last);

/// value - predicted(stamp); positive above the line. Extrapolates outside the window.
double residual(const LinearSegment& segment, MonthStamp stamp, double value);

/// Exact minimum-SSE placement of `k` breakpoints, each piece at least `min_len`
/// months long. A breakpoint is the first month of the piece that follows it.
std::vector<MonthStamp> detect_breakpoints(const DifferenceSeries& diff, int k, long min_len);

/// Sum of per-piece OLS SSE for the given breakpoints.
double segmentation_sse(const DifferenceSeries& diff, std::span<const MonthStamp> breakpoints);

/// Picks k in [0, max_k] by BIC with 3 parameters per extra piece.
int select_breakpoint_count(const DifferenceSeries& diff, int max_k, long min_len);

/// Excludes [b - halfwidth, b + halfwidth - 1] around each breakpoint b and fits the
/// remaining pieces. Months from `ongoing_transition_from` onward become a trailing
/// transition.
TrendModel build_trend_model(const DifferenceSeries& diff, std::span<const MonthStamp> breakpoints,
                             long transition_halfwidth,
                             std::optional<MonthStamp> ongoing_transition_from = std::nullopt,
                             long max_transition_months = kMaxTransitionMonths);

enum class DeviationKind { OnTrend, Above, Below, InTransition };

struct DeviationClass {
    DeviationKind kind;
    std::optional<double> z; ///< empty in transitions
    std::optional<std::size_t> segment;
};

/// |z| <= 1 is on-trend. Outside every window the nearest segment governs.
DeviationClass classify_deviation(const TrendModel& model, MonthStamp stamp, double value);

const char* to_string(DeviationKind kind);

} // namespace trendgap
