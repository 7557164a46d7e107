#include "test_support.hpp"

#include "trendgap/error.hpp"
#include "trendgap/segment_fit.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trendgap;
using trendgap::testing::make_diff;
using trendgap::testing::near_rel;

namespace {

const MonthStamp kStart(1980, 1);

std::vector<double> months_as_years(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / 12.0;
    return t;
}

} // namespace

TEST(FitOls, NoiselessLine) {
    std::vector<double> y(24);
    for (int i = 0; i < 24; ++i) y[i] = 5.0 + 2.0 * (i / 12.0);
    const auto d = make_diff(kStart, y);
    const auto s = fit_ols(d, kStart, kStart.plus_months(23));
    EXPECT_NEAR(s.slope, 2.0, 1e-9);
    EXPECT_NEAR(s.intercept, 5.0, 1e-9);
    EXPECT_NEAR(s.r_squared, 1.0, 1e-9);
    EXPECT_NEAR(s.residual_sigma, 0.0, 1e-9);
    EXPECT_EQ(s.start, kStart);
    EXPECT_EQ(s.end, kStart.plus_months(23));
}

TEST(FitOls, ConstantSeries) {
    const auto d = make_diff(kStart, std::vector<double>(30, 42.0));
    const auto s = fit_ols(d, kStart, kStart.plus_months(29));
    EXPECT_NEAR(s.slope, 0.0, 1e-12);
    EXPECT_EQ(s.r_squared, 0.0);
    EXPECT_EQ(s.residual_sigma, 0.0);
    EXPECT_NEAR(s.intercept, 42.0, 1e-12);
}

TEST(FitOls, MatchesNormalEquations) {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> noise(0.0, 10.0);
    std::vector<double> y(50);
    for (int i = 0; i < 50; ++i) y[i] = 30.0 - 7.0 * i / 12.0 + noise(rng);
    const auto s = fit_ols(make_diff(kStart, y), kStart, kStart.plus_months(49));
    const auto ref = trendgap::testing::normal_equations(months_as_years(50), y);
    EXPECT_TRUE(near_rel(s.slope, ref.slope, 1e-9));
    EXPECT_TRUE(near_rel(s.intercept, ref.intercept, 1e-9));
    EXPECT_NEAR(s.residual_sigma, std::sqrt(ref.sse / 49.0), 1e-9);
}

TEST(FitOls, ResidualsSumToZero) {
    std::mt19937_64 rng(102);
    std::normal_distribution<double> noise(0.0, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> y(40 + trial * 5);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = 100 + 0.5 * i + noise(rng);
        const auto d = make_diff(kStart, y);
        const auto s = fit_ols(d, d.front().stamp, d.back().stamp);
        double sum = 0.0;
        for (const auto& o : d.observations()) sum += residual(s, o.stamp, o.value);
        EXPECT_LT(std::abs(sum), 1e-9 * 100 * static_cast<double>(y.size()));
    }
}

TEST(FitOls, ConstantShiftMovesOnlyIntercept) {
    std::mt19937_64 rng(103);
    std::normal_distribution<double> noise(0.0, 4.0);
    std::vector<double> y(60), shifted(60);
    for (int i = 0; i < 60; ++i) {
        y[i] = -20 + 3.0 * i / 12.0 + noise(rng);
        shifted[i] = y[i] + 37.5;
    }
    const auto a = fit_ols(make_diff(kStart, y), kStart, kStart.plus_months(59));
    const auto b = fit_ols(make_diff(kStart, shifted), kStart, kStart.plus_months(59));
    EXPECT_NEAR(b.intercept - a.intercept, 37.5, 1e-9);
    EXPECT_NEAR(b.slope, a.slope, 1e-9);
    EXPECT_NEAR(b.r_squared, a.r_squared, 1e-9);
}

TEST(FitOls, WholeYearShiftKeepsSlope) {
    std::mt19937_64 rng(104);
    std::normal_distribution<double> noise(0.0, 4.0);
    std::vector<double> y(48);
    for (int i = 0; i < 48; ++i) y[i] = 10 - 5.0 * i / 12.0 + noise(rng);
    const auto a = fit_ols(make_diff(MonthStamp(1990, 4), y), MonthStamp(1990, 4), MonthStamp(1994, 3));
    const auto b = fit_ols(make_diff(MonthStamp(2003, 4), y), MonthStamp(2003, 4), MonthStamp(2007, 3));
    EXPECT_NEAR(a.slope, b.slope, 1e-9);
    EXPECT_NEAR(a.intercept, b.intercept, 1e-9);
    EXPECT_EQ(b.start, MonthStamp(2003, 4));
}

TEST(FitOls, Errors) {
    const auto d = make_diff(kStart, {1, 2, 3});
    EXPECT_THROW(fit_ols(d, kStart, kStart), Error);
    EXPECT_THROW(fit_ols(d, MonthStamp(1990, 1), MonthStamp(1991, 1)), Error);
    const DifferenceSeries gappy("a", "b", {{kStart, 1}, {kStart.plus_months(1), 2}, {kStart.plus_months(3), 4}});
    EXPECT_THROW(fit_ols(gappy, kStart, kStart.plus_months(3)), Error);
    EXPECT_NO_THROW(fit_ols(gappy, kStart, kStart.plus_months(2)));
    const std::vector<double> x{1, 1}, y{1, 2};
    EXPECT_THROW(fit_line(x, y), Error);
}

TEST(Residual, Examples) {
    const LinearSegment s{kStart, kStart.plus_months(11), 10.0, 0.0, 0.5, 2.0, false};
    EXPECT_EQ(residual(s, kStart.plus_months(3), 10.0), 0.0);
    EXPECT_EQ(residual(s, kStart.plus_months(3), 45.0), 35.0);
    const LinearSegment up{kStart, kStart.plus_months(11), 0.0, 12.0, 1, 0, false};
    EXPECT_NEAR(residual(up, kStart.plus_months(6), 6.0), 0.0, 1e-12);
    EXPECT_NEAR(residual(up, kStart.plus_months(24), 20.0), -4.0, 1e-12); // extrapolated
    EXPECT_FALSE(up.covers(kStart.plus_months(24)));
}

TEST(DetectBreakpoints, ZeroBreakpoints) {
    std::vector<double> y(80);
    for (int i = 0; i < 80; ++i) y[i] = std::sin(i * 0.3) + i * 0.1;
    const auto d = make_diff(kStart, y);
    EXPECT_TRUE(detect_breakpoints(d, 0, 12).empty());
    EXPECT_NEAR(segmentation_sse(d, {}), trendgap::testing::piece_sse(y, 0, 80), 1e-9);
}

TEST(DetectBreakpoints, SyntheticKinkRecoveryRate) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const auto y = trendgap::testing::broken_line(240, 120, 4.0, -20.0, 1.0, rng);
        const auto bps = detect_breakpoints(make_diff(kStart, y), 1, 60);
        ASSERT_EQ(bps.size(), 1u);
        hits += std::abs(months_between(kStart.plus_months(120), bps[0])) <= 3;
    }
    EXPECT_GE(hits, 95);
}

TEST(DetectBreakpoints, SyntheticKinkMatchesExhaustiveSearch) {
    std::mt19937_64 rng(2024);
    const auto y = trendgap::testing::broken_line(240, 120, 4.0, -20.0, 1.0, rng);
    const auto bps = detect_breakpoints(make_diff(kStart, y), 1, 60);
    const auto ref = trendgap::testing::exhaustive_breakpoints(y, 1, 60);
    ASSERT_EQ(bps.size(), 1u);
    EXPECT_EQ(bps[0], kStart.plus_months(static_cast<long>(ref.breakpoints[0])));
}

TEST(DetectBreakpoints, EqualsExhaustiveSearchForTwoBreakpoints) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> len(60, 140);
    std::normal_distribution<double> slope(0.0, 15.0);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = static_cast<std::size_t>(len(rng));
        std::normal_distribution<double> noise(0.0, 2.0);
        std::vector<double> y(n);
        double level = 0, s = slope(rng);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == n / 3 || i == 2 * n / 3) s = slope(rng);
            level += s / 12.0;
            y[i] = level + noise(rng);
        }
        const auto d = make_diff(kStart, y);
        for (int k = 0; k <= 2; ++k) {
            const auto bps = detect_breakpoints(d, k, 12);
            const auto ref = trendgap::testing::exhaustive_breakpoints(y, k, 12);
            ASSERT_EQ(bps.size(), ref.breakpoints.size());
            for (std::size_t i = 0; i < bps.size(); ++i) {
                EXPECT_EQ(bps[i], kStart.plus_months(static_cast<long>(ref.breakpoints[i])));
            }
            EXPECT_TRUE(near_rel(segmentation_sse(d, bps), ref.sse, 1e-9));
        }
    }
}

TEST(DetectBreakpoints, SseNeverIncreasesWithK) {
    std::mt19937_64 rng(78);
    std::normal_distribution<double> noise(0.0, 5.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> y(150);
        for (int i = 0; i < 150; ++i) y[i] = 20 * std::sin(i / 25.0) + noise(rng);
        const auto d = make_diff(kStart, y);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 4; ++k) {
            const double sse = segmentation_sse(d, detect_breakpoints(d, k, 12));
            EXPECT_LE(sse, prev * (1 + 1e-12));
            prev = sse;
        }
    }
}

TEST(DetectBreakpoints, TiesGoToEarliest) {
    // A perfect line: every placement has SSE 0, so the earliest legal one wins.
    std::vector<double> y(40);
    for (int i = 0; i < 40; ++i) y[i] = 2.0 * i;
    const auto bps = detect_breakpoints(make_diff(kStart, y), 2, 8);
    ASSERT_EQ(bps.size(), 2u);
    EXPECT_EQ(bps[0], kStart.plus_months(8));
    EXPECT_EQ(bps[1], kStart.plus_months(16));
}

TEST(DetectBreakpoints, Errors) {
    const auto d = make_diff(kStart, std::vector<double>(50, 1.0));
    EXPECT_THROW(detect_breakpoints(d, 1, 30), Error);
    EXPECT_THROW(detect_breakpoints(d, 1, 5), Error);
    EXPECT_THROW(detect_breakpoints(d, -1, 12), Error);
    try {
        detect_breakpoints(d, 3, 24);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("series too short"), std::string::npos);
    }
}

TEST(SelectBreakpointCount, PrefersTheTrueStructure) {
    std::mt19937_64 rng(79);
    const auto one = trendgap::testing::broken_line(240, 120, 4.0, -20.0, 1.0, rng);
    EXPECT_EQ(select_breakpoint_count(make_diff(kStart, one), 3, 36), 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> line(240);
    for (int i = 0; i < 240; ++i) line[i] = 0.5 * i + noise(rng);
    EXPECT_EQ(select_breakpoint_count(make_diff(kStart, line), 3, 36), 0);
}

TEST(BuildTrendModel, ZeroHalfwidthPartitionsAtBreakpoints) {
    std::mt19937_64 rng(80);
    const auto y = trendgap::testing::broken_line(120, 60, 4.0, -20.0, 1.0, rng);
    const auto d = make_diff(kStart, y);
    const MonthStamp bp[] = {kStart.plus_months(60)};
    const auto m = build_trend_model(d, bp, 0);
    ASSERT_EQ(m.segments().size(), 2u);
    EXPECT_TRUE(m.transitions().empty());
    EXPECT_EQ(m.segments()[0].start, kStart);
    EXPECT_EQ(m.segments()[0].end, kStart.plus_months(59));
    EXPECT_EQ(m.segments()[1].start, kStart.plus_months(60));
    EXPECT_EQ(m.segments()[1].end, kStart.plus_months(119));
}

TEST(BuildTrendModel, ExcludesTransitionsAndMatchesManualFits) {
    std::mt19937_64 rng(81);
    const auto y = trendgap::testing::broken_line(200, 100, 4.0, -20.0, 1.5, rng);
    const auto d = make_diff(kStart, y);
    const MonthStamp b = kStart.plus_months(100);
    const MonthStamp bp[] = {b};
    const auto m = build_trend_model(d, bp, 12, kStart.plus_months(180));
    ASSERT_EQ(m.segments().size(), 2u);
    ASSERT_EQ(m.transitions().size(), 2u);
    EXPECT_EQ(m.transitions()[0].start, b.plus_months(-12));
    EXPECT_EQ(m.transitions()[0].end, b.plus_months(11));
    EXPECT_EQ(m.transitions()[0].months(), 24);
    EXPECT_EQ(m.transitions()[1].start, kStart.plus_months(180));
    EXPECT_EQ(m.transitions()[1].end, kStart.plus_months(199));
    EXPECT_EQ(m.segments()[0], fit_ols(d, kStart, b.plus_months(-13)));
    EXPECT_EQ(m.segments()[1], fit_ols(d, b.plus_months(12), kStart.plus_months(179)));
    for (const auto& o : d.observations()) {
        int owners = 0;
        for (const auto& s : m.segments()) owners += s.covers(o.stamp);
        for (const auto& t : m.transitions()) owners += t.covers(o.stamp);
        EXPECT_EQ(owners, 1) << o.stamp.to_string();
    }
}

TEST(BuildTrendModel, Errors) {
    const auto d = make_diff(kStart, std::vector<double>(100, 1.0));
    const MonthStamp close[] = {kStart.plus_months(30), kStart.plus_months(40)};
    EXPECT_THROW(build_trend_model(d, close, 6), Error);
    const MonthStamp one[] = {kStart.plus_months(50)};
    EXPECT_THROW(build_trend_model(d, one, 19), Error); // 38-month window over the cap
    EXPECT_NO_THROW(build_trend_model(d, one, 18));
    EXPECT_THROW(build_trend_model(d, one, -1), Error);
    const MonthStamp outside[] = {MonthStamp(1970, 1)};
    EXPECT_THROW(build_trend_model(d, outside, 0), Error);
    const MonthStamp unsorted[] = {kStart.plus_months(60), kStart.plus_months(30)};
    EXPECT_THROW(build_trend_model(d, unsorted, 0), Error);
}

TEST(ClassifyDeviation, Examples) {
    const LinearSegment a{kStart, kStart.plus_months(59), 0.0, 12.0, 0.9, 5.0, false};
    const LinearSegment b{kStart.plus_months(84), kStart.plus_months(143), 100.0, -6.0, 0.9, 5.0, false};
    const TrendModel m({a, b}, {{kStart.plus_months(60), kStart.plus_months(83)}});

    const auto on = classify_deviation(m, kStart.plus_months(12), 12.0);
    EXPECT_EQ(on.kind, DeviationKind::OnTrend);
    EXPECT_NEAR(*on.z, 0.0, 1e-12);

    const auto above = classify_deviation(m, kStart.plus_months(12), 12.0 + 45.0);
    EXPECT_EQ(above.kind, DeviationKind::Above);
    EXPECT_NEAR(*above.z, 9.0, 1e-12);

    const auto below = classify_deviation(m, kStart.plus_months(96), 94.0 - 10.0);
    EXPECT_EQ(below.kind, DeviationKind::Below);
    EXPECT_EQ(*below.segment, 1u);

    const auto trans = classify_deviation(m, kStart.plus_months(70), 0.0);
    EXPECT_EQ(trans.kind, DeviationKind::InTransition);
    EXPECT_FALSE(trans.z.has_value());

    // Forward extrapolation of the last segment.
    const auto later = classify_deviation(m, kStart.plus_months(180), b.predict(kStart.plus_months(180)));
    EXPECT_EQ(later.kind, DeviationKind::OnTrend);
    EXPECT_EQ(*later.segment, 1u);

    EXPECT_THROW(classify_deviation(TrendModel({}, {}), kStart, 0.0), Error);
}

TEST(TrendModel, RejectsBrokenStructure) {
    const LinearSegment a{kStart, kStart.plus_months(59), 0.0, 1.0, 0.9, 1.0, false};
    const LinearSegment b{kStart.plus_months(50), kStart.plus_months(100), 0.0, 1.0, 0.9, 1.0, false};
    EXPECT_THROW(TrendModel({a, b}, {}), Error);
    const TransitionWindow before{MonthStamp(1970, 1), MonthStamp(1970, 6)};
    EXPECT_THROW(TrendModel({a}, {before}), Error);
    const TransitionWindow overlap{kStart.plus_months(50), kStart.plus_months(70)};
    EXPECT_THROW(TrendModel({a}, {overlap}), Error);
    const LinearSegment bad_r2{kStart, kStart.plus_months(5), 0.0, 1.0, 1.5, 1.0, false};
    EXPECT_THROW(TrendModel({bad_r2}, {}), Error);
}
