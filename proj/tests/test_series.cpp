#include <cmath>
#include <cstdio>
#include <sstream>

#include "doctest.h"

#include "cpflux/errors.hpp"
#include "cpflux/rng.hpp"
#include "cpflux/series.hpp"
#include "testutil.hpp"

using namespace cpflux;

TEST_CASE("load_csv parses a plain numeric column") {
    std::istringstream in("1.0\n2.0\n3.0");
    const TimeSeries ts = load_csv(in);
    REQUIRE(ts.n() == 3);
    CHECK(ts.value(1) == 1.0);
    CHECK(ts.value(2) == 2.0);
    CHECK(ts.value(3) == 3.0);
}

TEST_CASE("load_csv auto-detects a header row and handles 1000 rows") {
    std::string body = "y\n";
    SplitMix64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        body += std::to_string(rng.normal(100000.0, 5000.0)) + "\n";
    }
    std::istringstream in(body);
    const TimeSeries ts = load_csv(in, std::optional<std::string>{"y"});
    CHECK(ts.n() == 1000);
}

TEST_CASE("load_csv reports malformed rows with position") {
    std::istringstream in("1.0\nabc");
    try {
        load_csv(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row == 2);
        CHECK(e.column == 1);
    }
}

TEST_CASE("load_csv column selection") {
    SUBCASE("by 1-based index") {
        std::istringstream in("a,b\n1,10\n2,20\n3,30\n");
        const TimeSeries ts = load_csv(in, std::optional<std::string>{"2"});
        CHECK(ts.value(2) == 20.0);
    }
    SUBCASE("by name") {
        std::istringstream in("a,b\n1,10\n2,20\n");
        const TimeSeries ts = load_csv(in, std::optional<std::string>{"b"});
        CHECK(ts.value(1) == 10.0);
    }
    SUBCASE("unknown name") {
        std::istringstream in("a,b\n1,10\n");
        CHECK_THROWS_AS(load_csv(in, std::optional<std::string>{"c"}), ColumnNotFoundError);
    }
    SUBCASE("index out of width") {
        std::istringstream in("1,10\n2,20\n");
        CHECK_THROWS_AS(load_csv(in, std::optional<std::string>{"3"}), ColumnNotFoundError);
    }
}

TEST_CASE("load_csv rejects short, missing and non-finite input") {
    {
        std::istringstream in("1.0\n");
        CHECK_THROWS_AS(load_csv(in), EmptyInputError);
    }
    {
        std::istringstream in("");
        CHECK_THROWS_AS(load_csv(in), EmptyInputError);
    }
    {
        std::istringstream in("1.0\n\n ,2\n");
        CHECK_THROWS_AS(load_csv(in), ParseError);  // empty field in row 3
    }
    {
        std::istringstream in("1.0\nnan\n2.0\n");
        CHECK_THROWS_AS(load_csv(in), ParseError);
    }
    {
        std::istringstream in("1.0\ninf\n2.0\n");
        CHECK_THROWS_AS(load_csv(in), ParseError);
    }
}

TEST_CASE("load_csv handles quoted fields and CRLF") {
    std::istringstream in("\"y\"\r\n\"1.5\"\r\n2.5\r\n");
    const TimeSeries ts = load_csv(in);
    REQUIRE(ts.n() == 2);
    CHECK(ts.value(1) == 1.5);
}

TEST_CASE("values printed with 17 significant digits round-trip bit-exactly") {
    SplitMix64 rng(99);
    std::string body;
    std::vector<double> original;
    for (int i = 0; i < 50; ++i) {
        const double v = rng.normal(0.0, 1.0) * std::pow(10.0, (i % 7) - 3);
        original.push_back(v);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        body += buf;
    }
    std::istringstream in(body);
    const TimeSeries ts = load_csv(in);
    REQUIRE(ts.n() == 50);
    for (int i = 1; i <= 50; ++i) {
        CHECK(ts.value(i) == original[static_cast<std::size_t>(i - 1)]);
    }
}

TEST_CASE("data_range") {
    CHECK(data_range(TimeSeries({5, 5, 5})) == 0.0);
    CHECK(data_range(TimeSeries({-1, 3, 2})) == 4.0);
}

TEST_CASE("data_range is invariant under translation") {
    SplitMix64 rng(3);
    const auto base = testutil::random_values(rng, 64);
    auto shifted = base;
    for (auto& v : shifted) {
        v += 123.5;
    }
    CHECK(data_range(TimeSeries(base)) == doctest::Approx(data_range(TimeSeries(shifted))).epsilon(1e-12));
}

TEST_CASE("estimate_sigma2 recovers the noise variance of iid data") {
    SplitMix64 rng(42);
    std::vector<double> v(10000);
    for (auto& x : v) {
        x = rng.normal(0.0, 1.0);
    }
    const double s2 = estimate_sigma2(TimeSeries(v));
    CHECK(s2 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("estimate_sigma2 ignores mean shifts") {
    SplitMix64 rng(43);
    std::vector<double> v(10000);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mean = 10.0 * static_cast<double>(i / 1000);  // 10 shifts
        v[i] = rng.normal(mean, 2.0);
    }
    const double s2 = estimate_sigma2(TimeSeries(v));
    CHECK(s2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("estimate_sigma2 rejects constant differences") {
    CHECK_THROWS_AS(estimate_sigma2(TimeSeries({1, 2, 3, 4, 5})), DegenerateSeriesError);
    CHECK_THROWS_AS(estimate_sigma2(TimeSeries({1, 2})), TooShortError);
}

TEST_CASE("estimate_sigma2 shift and scale laws") {
    // Values on a 1/1024 grid so adding the shift is exact in binary floating
    // point; the estimator then cannot tell the series apart.
    SplitMix64 rng(44);
    std::vector<double> base(501);
    for (auto& v : base) {
        v = std::round((rng.uniform01() * 2.0 - 1.0) * 3.0 * 1024.0) / 1024.0;
    }
    const double s2 = estimate_sigma2(TimeSeries(base));

    auto shifted = base;
    for (auto& v : shifted) {
        v += 77.0;
    }
    CHECK(estimate_sigma2(TimeSeries(shifted)) == s2);

    auto scaled = base;
    for (auto& v : scaled) {
        v *= 4.0;  // power of two: scaling commutes exactly
    }
    CHECK(estimate_sigma2(TimeSeries(scaled)) == 16.0 * s2);
}

TEST_CASE("series_stats combines range and sigma2") {
    SplitMix64 rng(45);
    auto v = testutil::random_values(rng, 101, 5.0);
    const SeriesStats stats = series_stats(TimeSeries(v), 2.5);
    CHECK(stats.range == stats.max - stats.min);
    CHECK(stats.sigma2 == 2.5);
    CHECK_THROWS_AS(series_stats(TimeSeries(v), -1.0), InvalidSigmaError);
}

TEST_CASE("TimeSeries invariants") {
    CHECK_THROWS_AS(TimeSeries({1.0}), EmptyInputError);
    CHECK_THROWS_AS(TimeSeries({1.0, std::nan("")}), EmptyInputError);
    const TimeSeries ts({1.0, 2.0});
    CHECK_THROWS_AS(ts.value(0), IndexOutOfRangeError);
    CHECK_THROWS_AS(ts.value(3), IndexOutOfRangeError);
}
