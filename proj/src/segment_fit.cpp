#include "trendgap/segment_fit.hpp"

#include "trendgap/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace trendgap {

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("fit_line: x and y differ in length");
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 2) throw Error("need at least 2 points for a linear fit");

    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    if (*xmin == *xmax) throw Error("zero variance in the regressor");

    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = x[static_cast<std::size_t>(i)];
        target(i) = y[static_cast<std::size_t>(i)];
    }

    LineFit fit;
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    if (*ymin == *ymax) {
        fit.intercept = *ymin;
        fit.slope = 0.0;
        return fit; // r_squared defined as 0, no residuals
    }

    const Eigen::Vector2d coef = design.householderQr().solve(target);
    fit.intercept = coef(0);
    fit.slope = coef(1);

    const Eigen::VectorXd resid = target - design * coef;
    const double mean = target.mean();
    const double sst = (target.array() - mean).square().sum();
    fit.sse = resid.squaredNorm();
    fit.r_squared = std::clamp(1.0 - fit.sse / sst, 0.0, 1.0);
    fit.residual_sigma = std::sqrt(fit.sse / static_cast<double>(n - 1));
    return fit;
}

namespace {

void require_gap_free(std::span<const Observation> obs, const char* what) {
    for (std::size_t i = 1; i < obs.size(); ++i) {
        if (months_between(obs[i - 1].stamp, obs[i].stamp) != 1) {
            throw Error(std::string(what) + ": gap after " + obs[i - 1].stamp.to_string());
        }
    }
}

LinearSegment fit_observations(std::span<const Observation> obs) {
    if (obs.size() < 2) throw Error("fewer than 2 observations in fit window");
    require_gap_free(obs, "fit window");
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(obs.size());
    y.reserve(obs.size());
    for (const auto& o : obs) {
        x.push_back(static_cast<double>(months_between(obs.front().stamp, o.stamp)) / 12.0);
        y.push_back(o.value);
    }
    const LineFit fit = fit_line(x, y);
    return LinearSegment{obs.front().stamp, obs.back().stamp, fit.intercept,  fit.slope,
                         fit.r_squared,     fit.residual_sigma, false};
}

// O(1) SSE of a straight-line fit over any contiguous range of positions.
class PrefixCost {
public:
    explicit PrefixCost(std::span<const Observation> obs) : sx_(obs.size() + 1), sy_(obs.size() + 1),
        sxx_(obs.size() + 1), sxy_(obs.size() + 1), syy_(obs.size() + 1) {
        long double mean = 0;
        for (const auto& o : obs) mean += o.value;
        mean /= static_cast<long double>(obs.size());
        const long double mid = static_cast<long double>(obs.size()) / 2;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const long double x = static_cast<long double>(i) - mid;
            const long double y = obs[i].value - mean;
            sx_[i + 1] = sx_[i] + x;
            sy_[i + 1] = sy_[i] + y;
            sxx_[i + 1] = sxx_[i] + x * x;
            sxy_[i + 1] = sxy_[i] + x * y;
            syy_[i + 1] = syy_[i] + y * y;
        }
    }

    /// SSE over positions [i, j).
    double operator()(std::size_t i, std::size_t j) const {
        const long double m = static_cast<long double>(j - i);
        const long double sx = sx_[j] - sx_[i];
        const long double sy = sy_[j] - sy_[i];
        const long double cxx = (sxx_[j] - sxx_[i]) - sx * sx / m;
        const long double cxy = (sxy_[j] - sxy_[i]) - sx * sy / m;
        const long double cyy = (syy_[j] - syy_[i]) - sy * sy / m;
        const long double sse = cxx > 0 ? cyy - cxy * cxy / cxx : cyy;
        return static_cast<double>(std::max<long double>(sse, 0));
    }

private:
    std::vector<long double> sx_, sy_, sxx_, sxy_, syy_;
};

} // namespace

LinearSegment fit_ols(const DifferenceSeries& diff, MonthStamp first, MonthStamp last) {
    if (last < first) throw Error("fit window end precedes start");
    const auto obs = diff.window(first, last);
    return fit_observations(obs);
}

double residual(const LinearSegment& segment, MonthStamp stamp, double value) {
    return value - segment.predict(stamp);
}

std::vector<MonthStamp> detect_breakpoints(const DifferenceSeries& diff, int k, long min_len) {
    if (k < 0) throw Error("breakpoint count must be non-negative");
    if (min_len < 6) throw Error("min_len must be at least 6 months");
    const auto obs = diff.observations();
    const std::size_t n = obs.size();
    const auto pieces = static_cast<std::size_t>(k) + 1;
    const auto len = static_cast<std::size_t>(min_len);
    if (n < pieces * len) {
        throw Error("series too short: " + std::to_string(n) + " months for " +
                    std::to_string(k) + " breakpoints with min_len " + std::to_string(min_len));
    }
    require_gap_free(obs, "segmentation");
    if (k == 0) return {};

    const PrefixCost cost(obs);
    constexpr double inf = std::numeric_limits<double>::infinity();

    // best[p][i]: minimum SSE splitting positions [i, n) into p pieces.
    // next[p][i]: earliest start of the second piece attaining it.
    std::vector<std::vector<double>> best(pieces + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> next(pieces + 1, std::vector<std::size_t>(n + 1, n));
    for (std::size_t i = 0; i + len <= n; ++i) best[1][i] = cost(i, n);
    for (std::size_t p = 2; p <= pieces; ++p) {
        for (std::size_t i = 0; i + p * len <= n; ++i) {
            for (std::size_t j = i + len; j + (p - 1) * len <= n; ++j) {
                const double c = cost(i, j) + best[p - 1][j];
                if (c < best[p][i]) {
                    best[p][i] = c;
                    next[p][i] = j;
                }
            }
        }
    }

    std::vector<MonthStamp> out;
    std::size_t i = 0;
    for (std::size_t p = pieces; p > 1; --p) {
        i = next[p][i];
        out.push_back(obs[i].stamp);
    }
    return out;
}

double segmentation_sse(const DifferenceSeries& diff, std::span<const MonthStamp> breakpoints) {
    const auto obs = diff.observations();
    double total = 0.0;
    std::size_t begin = 0;
    auto piece_sse = [&](std::size_t from, std::size_t to) {
        std::vector<double> x, y;
        for (std::size_t i = from; i < to; ++i) {
            x.push_back(static_cast<double>(i));
            y.push_back(obs[i].value);
        }
        return fit_line(x, y).sse;
    };
    for (const auto& b : breakpoints) {
        auto it = std::find_if(obs.begin(), obs.end(), [&](const Observation& o) { return o.stamp == b; });
        if (it == obs.end()) throw Error("breakpoint " + b.to_string() + " not in series");
        const auto end = static_cast<std::size_t>(it - obs.begin());
        total += piece_sse(begin, end);
        begin = end;
    }
    return total + piece_sse(begin, obs.size());
}

int select_breakpoint_count(const DifferenceSeries& diff, int max_k, long min_len) {
    const double n = static_cast<double>(diff.size());
    int best_k = 0;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= max_k; ++k) {
        if (diff.size() < static_cast<std::size_t>((k + 1) * min_len)) break;
        const auto bps = detect_breakpoints(diff, k, min_len);
        const double sse = std::max(segmentation_sse(diff, bps), 1e-300);
        const double params = 2.0 * (k + 1) + k;
        const double bic = n * std::log(sse / n) + params * std::log(n);
        if (bic < best_bic) {
            best_bic = bic;
            best_k = k;
        }
    }
    return best_k;
}

TrendModel::TrendModel(std::vector<LinearSegment> segments,
                       std::vector<TransitionWindow> transitions, long max_transition_months)
    : segments_(std::move(segments)), transitions_(std::move(transitions)) {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (!(s.start < s.end)) throw Error("segment must span at least 2 months");
        if (!(s.r_squared >= 0.0 && s.r_squared <= 1.0)) throw Error("r_squared outside [0, 1]");
        if (!(s.residual_sigma >= 0.0)) throw Error("negative residual_sigma");
        if (i > 0 && !(segments_[i - 1].end < s.start)) throw Error("segments overlap or are unordered");
    }
    for (std::size_t i = 0; i < transitions_.size(); ++i) {
        const auto& t = transitions_[i];
        if (t.end < t.start) throw Error("transition end precedes start");
        if (t.months() > max_transition_months) {
            throw Error("transition " + t.start.to_string() + ".." + t.end.to_string() + " exceeds " +
                        std::to_string(max_transition_months) + " months");
        }
        if (i > 0 && !(transitions_[i - 1].end < t.start)) throw Error("transitions overlap or are unordered");
        bool after_some = false;
        for (const auto& s : segments_) {
            if (!(s.end < t.start || t.end < s.start)) throw Error("transition overlaps a segment");
            if (s.end < t.start) after_some = true;
        }
        if (!after_some) throw Error("transition precedes every segment");
    }
}

TrendModel build_trend_model(const DifferenceSeries& diff, std::span<const MonthStamp> breakpoints,
                             long transition_halfwidth, std::optional<MonthStamp> ongoing_transition_from,
                             long max_transition_months) {
    if (transition_halfwidth < 0) throw Error("transition_halfwidth must be non-negative");
    if (diff.empty()) throw Error("empty difference series");
    const MonthStamp first = diff.front().stamp;
    MonthStamp last = diff.back().stamp;
    if (ongoing_transition_from) {
        if (*ongoing_transition_from <= first || *ongoing_transition_from > last) {
            throw Error("ongoing transition start outside the series span");
        }
    }

    std::vector<TransitionWindow> transitions;
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        const MonthStamp b = breakpoints[i];
        if (i > 0 && !(breakpoints[i - 1] < b)) throw Error("breakpoints must be strictly increasing");
        if (b <= first || b > last) throw Error("breakpoint " + b.to_string() + " outside the series span");
        if (ongoing_transition_from && b >= *ongoing_transition_from) {
            throw Error("breakpoint " + b.to_string() + " falls inside the ongoing transition");
        }
        if (transition_halfwidth > 0) {
            transitions.push_back({b.plus_months(-transition_halfwidth),
                                   b.plus_months(transition_halfwidth - 1)});
        }
    }

    // Piece boundaries: each piece runs up to the next excluded window or breakpoint.
    std::vector<std::pair<MonthStamp, MonthStamp>> pieces;
    MonthStamp piece_start = first;
    const MonthStamp tail_end = ongoing_transition_from ? ongoing_transition_from->plus_months(-1) : last;
    for (const MonthStamp b : breakpoints) {
        const MonthStamp piece_end = b.plus_months(-transition_halfwidth - 1);
        const MonthStamp following = b.plus_months(transition_halfwidth);
        if (months_between(piece_start, piece_end) < 1) {
            throw Error("transition windows overlap: halfwidth " + std::to_string(transition_halfwidth) +
                        " too large for breakpoint spacing");
        }
        pieces.emplace_back(piece_start, piece_end);
        piece_start = following;
    }
    if (months_between(piece_start, tail_end) < 1) {
        throw Error("transition windows overlap: halfwidth " + std::to_string(transition_halfwidth) +
                    " too large for breakpoint spacing");
    }
    pieces.emplace_back(piece_start, tail_end);

    std::vector<LinearSegment> segments;
    segments.reserve(pieces.size());
    for (const auto& [a, b] : pieces) segments.push_back(fit_ols(diff, a, b));

    if (ongoing_transition_from) transitions.push_back({*ongoing_transition_from, last});
    return TrendModel(std::move(segments), std::move(transitions), max_transition_months);
}

DeviationClass classify_deviation(const TrendModel& model, MonthStamp stamp, double value) {
    const auto& segments = model.segments();
    if (segments.empty()) throw Error("trend model has no segments");
    for (const auto& t : model.transitions()) {
        if (t.covers(stamp)) return {DeviationKind::InTransition, std::nullopt, std::nullopt};
    }

    std::size_t governing = 0;
    long best_distance = std::numeric_limits<long>::max();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        long distance = 0;
        if (stamp < s.start) distance = months_between(stamp, s.start);
        else if (s.end < stamp) distance = months_between(s.end, stamp);
        if (distance < best_distance) {
            best_distance = distance;
            governing = i;
        }
    }

    const auto& s = segments[governing];
    const double r = residual(s, stamp, value);
    double z = 0.0;
    if (s.residual_sigma > 0.0) {
        z = r / s.residual_sigma;
    } else if (r != 0.0) {
        z = std::copysign(std::numeric_limits<double>::infinity(), r);
    }
    DeviationKind kind = DeviationKind::OnTrend;
    if (std::abs(z) > 1.0) kind = z > 0 ? DeviationKind::Above : DeviationKind::Below;
    return {kind, z, governing};
}

const char* to_string(DeviationKind kind) {
    switch (kind) {
    case DeviationKind::OnTrend: return "on-trend";
    case DeviationKind::Above: return "above";
    case DeviationKind::Below: return "below";
    case DeviationKind::InTransition: return "in-transition";
    }
    return "unknown";
}

} // namespace trendgap
