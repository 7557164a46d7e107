#include "test_support.hpp"

#include "trendgap/error.hpp"
#include "trendgap/price_translate.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace trendgap;
using trendgap::testing::make_path;

TEST(PercentChange, Examples) {
    EXPECT_NEAR(percent_change(173.0, 263.0), 52.0, 0.05);
    EXPECT_EQ(percent_change(88.5, 88.5), 0.0);
    EXPECT_EQ(percent_change(100.0, 150.0), 50.0);
    EXPECT_THROW(percent_change(0.0, 1.0), Error);
    EXPECT_THROW(percent_change(-3.0, 1.0), Error);
}

TEST(PercentChange, InverseComposition) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1.0, 500.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng), y = u(rng);
        const double p1 = percent_change(x, y), p2 = percent_change(y, x);
        EXPECT_NEAR((1 + p1 / 100) * (1 + p2 / 100), 1.0, 1e-9);
    }
}

TEST(ComponentFromDifference, FlatHeadlineEpisode) {
    // Headline held at 212 while the difference falls 39 -> -51 in nine steps.
    std::vector<double> h(10, 212.0), d(10);
    for (int i = 0; i < 10; ++i) d[i] = 39.0 - 10.0 * i;
    const auto c = component_index_from_difference(make_path(MonthStamp(2009, 3), h),
                                                   make_path(MonthStamp(2009, 3), d));
    EXPECT_EQ(c.front().value, 173.0);
    EXPECT_EQ(c.back().value, 263.0);
    EXPECT_EQ(c.back().stamp, MonthStamp(2009, 12));
    EXPECT_NEAR(percent_change(c.front().value, c.back().value), 52.0, 0.05);
}

TEST(ComponentFromDifference, ZeroDifferenceAndOracle) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-100.0, 300.0);
    std::vector<double> h(30), d(30);
    for (int i = 0; i < 30; ++i) {
        h[i] = u(rng);
        d[i] = u(rng);
    }
    const MonthStamp s(2004, 4);
    const auto same = component_index_from_difference(make_path(s, h), make_path(s, std::vector<double>(30, 0.0)));
    EXPECT_EQ(same, make_path(s, h));

    const auto c = component_index_from_difference(make_path(s, h), make_path(s, d));
    for (int i = 0; i < 30; ++i) {
        EXPECT_EQ(c[i].value, h[i] - d[i]);
        // Re-differencing recovers the path up to rounding of the two subtractions.
        EXPECT_NEAR(h[i] - c[i].value, d[i], 1e-13 * (std::abs(h[i]) + std::abs(d[i])));
    }
}

TEST(ComponentFromDifference, StampMismatch) {
    EXPECT_THROW(component_index_from_difference(make_path(MonthStamp(2009, 3), {1, 2}),
                                                 make_path(MonthStamp(2009, 4), {1, 2})),
                 Error);
    EXPECT_THROW(component_index_from_difference(make_path(MonthStamp(2009, 3), {1, 2, 3}),
                                                 make_path(MonthStamp(2009, 3), {1, 2})),
                 Error);
}

TEST(ExtrapolateHeadline, Examples) {
    const MonthlySeries s("h", make_path(MonthStamp(2008, 1), {90.0, 95.0, 100.0}));
    const auto flat = extrapolate_headline(s, MonthStamp(2008, 3), 6, 0.0);
    ASSERT_EQ(flat.size(), 6u);
    EXPECT_EQ(flat.front().stamp, MonthStamp(2008, 4));
    for (const auto& o : flat) EXPECT_EQ(o.value, 100.0);

    const auto twelve = extrapolate_headline(s, MonthStamp(2008, 3), 12, 12.0);
    EXPECT_NEAR(twelve.back().value, 112.0, 1e-9);

    const double r = 3.7;
    const auto loop = extrapolate_headline(s, MonthStamp(2008, 2), 24, r);
    double v = 95.0;
    const double g = std::pow(1.0 + r / 100.0, 1.0 / 12.0);
    for (const auto& o : loop) {
        v *= g;
        EXPECT_NEAR(o.value, v, 1e-9);
    }

    EXPECT_THROW(extrapolate_headline(s, MonthStamp(2009, 1), 6, 1.0), Error);
    EXPECT_THROW(extrapolate_headline(s, MonthStamp(2008, 1), 6, std::nan("")), Error);
}

TEST(TrailingGrowth, GeometricMean) {
    std::vector<double> v(61);
    for (int i = 0; i <= 60; ++i) v[i] = 100.0 * std::pow(1.03, i / 12.0);
    const MonthlySeries s("h", make_path(MonthStamp(2000, 1), v));
    EXPECT_NEAR(trailing_annual_growth(s, MonthStamp(2005, 1), 5), 3.0, 1e-9);
    EXPECT_THROW(trailing_annual_growth(s, MonthStamp(2004, 1), 5), Error);
}

TEST(CalibratePrice, ExactLine) {
    const std::vector<PricePair> pairs{{10, 10}, {20, 20}, {35, 35}};
    const auto c = calibrate_price(pairs);
    EXPECT_NEAR(c.alpha, 1.0, 1e-12);
    EXPECT_NEAR(c.beta, 0.0, 1e-9);
    EXPECT_NEAR(*c.fit_r_squared, 1.0, 1e-12);
    EXPECT_EQ(c.source, "fitted");
}

TEST(CalibratePrice, MatchesNormalEquations) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> idx(-130.0, 40.0);
    std::normal_distribution<double> noise(0.0, 6.0);
    std::vector<PricePair> pairs;
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        const double d = idx(rng);
        pairs.push_back({d, -0.95 * d + 4.0 + noise(rng)});
        x.push_back(pairs.back().index);
        y.push_back(pairs.back().price_usd);
    }
    const auto c = calibrate_price(pairs);
    const auto ref = trendgap::testing::normal_equations(x, y);
    EXPECT_TRUE(trendgap::testing::near_rel(c.alpha, ref.slope, 1e-9));
    EXPECT_TRUE(trendgap::testing::near_rel(c.beta, ref.intercept, 1e-9));

    // Reported r^2 agrees with residuals of the calibrated map.
    double mean = 0, sse = 0, sst = 0;
    for (double v : y) mean += v / 20.0;
    for (const auto& p : pairs) {
        const double e = p.price_usd - index_to_price(c, p.index);
        sse += e * e;
        sst += (p.price_usd - mean) * (p.price_usd - mean);
    }
    EXPECT_NEAR(*c.fit_r_squared, 1.0 - sse / sst, 1e-9);
}

TEST(CalibratePrice, Errors) {
    const std::vector<PricePair> one{{1, 2}};
    EXPECT_THROW(calibrate_price(one), Error);
    const std::vector<PricePair> same{{1, 2}, {1, 3}};
    EXPECT_THROW(calibrate_price(same), Error);
}

TEST(Heuristic, DifferenceScale) {
    const auto h = crude_difference_heuristic();
    EXPECT_EQ(h.alpha, -1.0);
    EXPECT_EQ(h.beta, 0.0);
    EXPECT_EQ(h.source, "heuristic");
    EXPECT_FALSE(h.fit_r_squared.has_value());
    EXPECT_EQ(index_to_price(h, -120.0), 120.0);
    EXPECT_EQ(index_to_price(PriceCalibration{1.0, 0.0, std::nullopt, "identity"}, 75.0), 75.0);
    EXPECT_EQ(index_to_price(PriceCalibration{1.0, 0.0, std::nullopt, "identity"}, 0.0), 0.0);
}

TEST(PricePairsCsv, ParseAndErrors) {
    const auto p = parse_price_pairs_csv("index,price_usd\n-70.5,72.1\r\n-120,119\n");
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0].index, -70.5);
    EXPECT_EQ(p[1].price_usd, 119.0);
    EXPECT_THROW(parse_price_pairs_csv("a,b\n1,2\n"), Error);
    EXPECT_THROW(parse_price_pairs_csv("index,price_usd\n1,x\n"), Error);
    EXPECT_THROW(parse_price_pairs_csv("index,price_usd\n"), Error);
}

namespace {

// a(t) = z(t), b(t) = z(t - shift) on a shared window, so a leads b by `shift`.
std::pair<StampedSeries, StampedSeries> shifted_pair(long shift, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0);
    const long pad = 20, n = 80;
    std::vector<double> z(static_cast<std::size_t>(n + 2 * pad));
    double level = 0.0;
    for (auto& v : z) v = (level += step(rng));
    const MonthStamp first(2000, 1);
    std::vector<Observation> a, b;
    for (long i = 0; i < n; ++i) {
        a.push_back({first.plus_months(i), z[static_cast<std::size_t>(pad + i)]});
        b.push_back({first.plus_months(i), z[static_cast<std::size_t>(pad + i - shift)]});
    }
    return {StampedSeries(a), StampedSeries(b)};
}

} // namespace

TEST(LeadLag, RecoversEveryPlantedShift) {
    for (long shift = -12; shift <= 12; ++shift) {
        const auto [a, b] = shifted_pair(shift, 100 + static_cast<std::uint64_t>(shift + 12));
        const auto ll = lead_lag(a, b, 12);
        EXPECT_EQ(ll.lag, shift);
        EXPECT_NEAR(ll.correlation, 1.0, 1e-12);
        const auto back = lead_lag(b, a, 12);
        EXPECT_EQ(back.lag, -shift);
        EXPECT_NEAR(back.correlation, ll.correlation, 1e-12);
    }
}

TEST(LeadLag, IdentityAndErrors) {
    const auto [a, b] = shifted_pair(0, 3);
    const auto self = lead_lag(a, a, 12);
    EXPECT_EQ(self.lag, 0);
    EXPECT_NEAR(self.correlation, 1.0, 1e-12);

    const StampedSeries small(make_path(MonthStamp(2000, 1), std::vector<double>(30, 1.0)));
    EXPECT_THROW(lead_lag(small, small, 12), Error);
    EXPECT_NO_THROW(lead_lag(small, small, 6));
}

TEST(LeadLag, TiesGoToSmallestMagnitude) {
    // A periodic signal correlates perfectly at multiples of its period.
    std::vector<double> v(60);
    for (int i = 0; i < 60; ++i) v[i] = (i % 4 == 0) ? 1.0 : (i % 4 == 2 ? -1.0 : 0.0);
    const StampedSeries a(make_path(MonthStamp(2000, 1), v));
    const auto ll = lead_lag(a, a, 8);
    EXPECT_EQ(ll.lag, 0);
}

TEST(LeadLag, DetrendedVariantIgnoresSharedDrift) {
    const auto [a, b] = shifted_pair(5, 21);
    std::vector<Observation> ad, bd;
    double t = 0.0;
    for (const auto& o : a.observations()) ad.push_back({o.stamp, o.value + 2.0 * t++});
    t = 0.0;
    for (const auto& o : b.observations()) bd.push_back({o.stamp, o.value - 1.5 * t++});
    const auto ll = lead_lag_detrended(StampedSeries(ad), StampedSeries(bd), 12);
    EXPECT_EQ(ll.lag, 5);
}
