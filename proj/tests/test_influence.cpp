#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "cpflux/detect.hpp"
#include "cpflux/errors.hpp"
#include "cpflux/influence.hpp"
#include "cpflux/rng.hpp"
#include "testutil.hpp"

using namespace cpflux;

namespace {

constexpr int NA = LabeledSeries::kNa;

Segmentation toy_segmentation() {  // labels 1 1 1 2 3 3 3
    Segmentation seg;
    seg.n = 7;
    seg.changepoints = {3, 4};
    return seg;
}

Segmentation random_segmentation(SplitMix64& rng, int n) {
    Segmentation seg;
    seg.n = n;
    for (int j = 1; j < n; ++j) {
        if (rng.uniform01() < 0.3) {
            seg.changepoints.push_back(j);
        }
    }
    return seg;
}

DetectorConfig config(double beta, double sigma2) {
    DetectorConfig cfg;
    cfg.beta = beta;
    cfg.sigma2_override = sigma2;
    return cfg;
}

}  // namespace

TEST_CASE("apply_deletion") {
    const TimeSeries ts({1, 2, 3});
    CHECK(apply_deletion(ts, 2).values() == std::vector<double>{1, 3});
    CHECK(apply_deletion(ts, 1).values() == std::vector<double>{2, 3});
    CHECK(apply_deletion(ts, 3).values() == std::vector<double>{1, 2});
    CHECK_THROWS_AS(apply_deletion(ts, 4), IndexOutOfRangeError);
    CHECK_THROWS_AS(apply_deletion(TimeSeries({1, 2}), 1), TooShortError);
}

TEST_CASE("apply_contamination") {
    const TimeSeries ts({0, 1, 0});
    const TimeSeries out = apply_contamination(ts, 2, 2.0 * data_range(ts));
    CHECK(out.values() == std::vector<double>{0, 3, 0});
    CHECK(apply_contamination(ts, 2, 0.0).values() == ts.values());
    CHECK_THROWS_AS(apply_contamination(ts, 0, 1.0), IndexOutOfRangeError);
}

TEST_CASE("expected_deletion worked examples") {
    const Segmentation seg = toy_segmentation();
    CHECK(expected_deletion(seg, 1).labels() == std::vector<int>{NA, 1, 1, 2, 3, 3, 3});
    CHECK(expected_deletion(seg, 4).labels() == std::vector<int>{1, 1, 1, NA, 2, 2, 2});
    CHECK(expected_deletion(seg, 6).labels() == std::vector<int>{1, 1, 1, 2, 3, NA, 3});
    CHECK_THROWS_AS(expected_deletion(seg, 8), IndexOutOfRangeError);
}

TEST_CASE("expected_contamination worked examples") {
    const Segmentation seg = toy_segmentation();
    CHECK(expected_contamination(seg, 1).labels() == std::vector<int>{1, 2, 2, 3, 4, 4, 4});
    CHECK(expected_contamination(seg, 2).labels() == std::vector<int>{1, 2, 3, 4, 5, 5, 5});
    // Index 4 is already a segment of its own.
    CHECK(expected_contamination(seg, 4).labels() == std::vector<int>{1, 1, 1, 2, 3, 3, 3});
}

TEST_CASE("align_observed") {
    SUBCASE("deletion at the front") {
        Segmentation seg;
        seg.n = 3;
        seg.changepoints = {2};
        const LabeledSeries out = align_observed(seg, {Method::Delete, 1, 0.0}, 4);
        CHECK(out.labels() == std::vector<int>{NA, 1, 1, 2});
    }
    SUBCASE("contamination is index-for-index") {
        Segmentation seg;
        seg.n = 4;
        seg.changepoints = {1, 3};
        const LabeledSeries out = align_observed(seg, {Method::Contaminate, 2, 1.0}, 4);
        CHECK(out.labels() == std::vector<int>{1, 2, 2, 3});
    }
    SUBCASE("deletion in the middle") {
        Segmentation seg;
        seg.n = 3;
        seg.changepoints = {1};
        const LabeledSeries out = align_observed(seg, {Method::Delete, 3, 0.0}, 4);
        CHECK(out.labels() == std::vector<int>{1, 2, NA, 2});
    }
    SUBCASE("length mismatch") {
        Segmentation seg;
        seg.n = 4;
        CHECK_THROWS_AS(align_observed(seg, {Method::Delete, 1, 0.0}, 4), LengthMismatchError);
    }
}

TEST_CASE("LabeledSeries invariants and changepoints") {
    CHECK_THROWS_AS(LabeledSeries({2, 2, 3}), Error);           // must start at 1
    CHECK_THROWS_AS(LabeledSeries({1, 3}), Error);              // adjacent labels jump
    CHECK_THROWS_AS(LabeledSeries({1, NA, NA, 2}), Error);      // two NA slots
    CHECK(LabeledSeries({1, 1, 2, 2}).changepoints() == std::vector<int>{2});
    CHECK(LabeledSeries({1, 1, NA, 2, 2}).changepoints() == std::vector<int>{3});
    CHECK(LabeledSeries({1, NA, 1, 2}).changepoints() == std::vector<int>{3});
    CHECK(LabeledSeries({NA, 1, 1, 2}).changepoints() == std::vector<int>{3});
    CHECK(LabeledSeries({1, 1, 1}).changepoints().empty());
    CHECK(LabeledSeries({1, 1, 2}).na_slot() == std::nullopt);
    CHECK(LabeledSeries({1, NA, 2}).na_slot() == 2);
}

TEST_CASE("renumbering law holds over random segmentations and all alterations") {
    SplitMix64 rng(31);
    for (int round = 0; round < 60; ++round) {
        const int n = 2 + static_cast<int>(rng.next() % 12);
        const Segmentation seg = random_segmentation(rng, n);
        for (int t = 1; t <= n; ++t) {
            // Constructors validate the invariants; reaching here is the test.
            const LabeledSeries del = expected_deletion(seg, t);
            CHECK(del.na_slot() == t);
            const LabeledSeries con = expected_contamination(seg, t);
            CHECK(con.na_slot() == std::nullopt);
        }
    }
}

TEST_CASE("deletion expectation keeps or drops exactly one segment") {
    // For a deletion inside a segment of length >= 2 the expected changepoint
    // set equals the original one, up to the NA-slot convention: a boundary
    // tau with the NA immediately after it (t = tau + 1) is read at tau + 1.
    // Deleting a singleton segment drops the boundary before it and keeps the
    // one at it.
    SplitMix64 rng(32);
    for (int round = 0; round < 60; ++round) {
        const int n = 3 + static_cast<int>(rng.next() % 12);
        const Segmentation seg = random_segmentation(rng, n);
        for (int t = 1; t <= n; ++t) {
            const auto bounds = seg.segment_bounds(seg.segment_of(t));
            const bool singleton = bounds.first == bounds.second;
            std::vector<int> reference;
            for (const int tau : seg.changepoints) {
                if (singleton && (tau == t - 1 || (t == 1 && tau == 1))) {
                    continue;  // a deleted singleton has no readable boundary before it
                }
                reference.push_back(tau + 1 == t ? tau + 1 : tau);
            }
            CHECK(expected_deletion(seg, t).changepoints() == reference);
        }
    }
}

TEST_CASE("contamination expectation adds 2, 1 or 0 changepoints") {
    SplitMix64 rng(33);
    for (int round = 0; round < 60; ++round) {
        const int n = 2 + static_cast<int>(rng.next() % 12);
        const Segmentation seg = random_segmentation(rng, n);
        for (int t = 1; t <= n; ++t) {
            const auto& cps = seg.changepoints;
            const bool left_present =
                t == 1 || std::binary_search(cps.begin(), cps.end(), t - 1);
            const bool right_present =
                t == n || std::binary_search(cps.begin(), cps.end(), t);
            const int added = (left_present ? 0 : 1) + (right_present ? 0 : 1);
            const LabeledSeries expected = expected_contamination(seg, t);
            CHECK(static_cast<int>(expected.changepoints().size()) ==
                  static_cast<int>(cps.size()) + added);
            if (added == 2) {
                CHECK(t > 1);
                CHECK(t < n);
            }
        }
    }
}

TEST_CASE("check_outlier_threshold") {
    const TimeSeries ts({0, 0, 0, 0, 0, 0});
    const CostModel cm(ts, 1.0);
    Segmentation seg;
    seg.n = 6;
    CHECK_FALSE(check_outlier_threshold(cm, seg, 3, 2.0, 0.0));  // v at the mean
    CHECK(check_outlier_threshold(cm, seg, 3, 2.0, 3.0));        // 9 > 4
    CHECK_FALSE(check_outlier_threshold(cm, seg, 3, 4.5, 3.0));  // 9 <= 9
    CHECK_THROWS_AS(check_outlier_threshold(cm, seg, 9, 2.0, 3.0), IndexOutOfRangeError);
}

TEST_CASE("sufficiently large contamination provably splits out a segment") {
    SplitMix64 rng(34);
    int tested = 0;
    while (tested < 60) {
        const int n = 12 + static_cast<int>(rng.next() % 80);
        const TimeSeries ts(testutil::shifted_series(rng, n, 2 + static_cast<int>(rng.next() % 3)));
        const double sigma2 = estimate_sigma2(ts);
        const double beta = default_beta(n, sigma2);
        const double range = data_range(ts);
        if (2.0 * beta >= range * range / (4.0 * sigma2)) {
            continue;  // keep only instances inside the guaranteed zone
        }
        const CostModel cm(ts, sigma2);
        const auto cfg = config(beta, sigma2);
        const Segmentation original = pelt(cm, cfg);
        const int t = 2 + static_cast<int>(rng.next() % static_cast<unsigned>(n - 2));
        const double v = ts.value(t) + 2.0 * range;
        CHECK(check_outlier_threshold(cm, original, t, beta, v));

        const TimeSeries contaminated = apply_contamination(ts, t, 2.0 * range);
        const CostModel ccm(contaminated, sigma2);
        const Segmentation seg = pelt(ccm, cfg);
        const auto& cps = seg.changepoints;
        CHECK(std::binary_search(cps.begin(), cps.end(), t - 1));
        CHECK(std::binary_search(cps.begin(), cps.end(), t));
        ++tested;
    }
}

TEST_CASE("run_influence on an ideal step: everything stable, zero matrix") {
    std::vector<double> values;
    values.insert(values.end(), 10, 0.0);
    values.insert(values.end(), 10, 100.0);
    const TimeSeries ts(values);
    for (const Method method : {Method::Delete, Method::Contaminate}) {
        const InfluenceReport report = run_influence(ts, method, config(6.0, 1.0));
        REQUIRE(report.original.changepoints == std::vector<int>{10});
        REQUIRE(report.statuses.size() == 1);
        CHECK(report.statuses[0] == Status::Stable);
        for (int j = 1; j <= 20; ++j) {
            CHECK(report.location_delta[static_cast<std::size_t>(j - 1)] == 0);
        }
        for (int t = 1; t <= 20; ++t) {
            for (int i = 1; i <= 20; ++i) {
                CHECK(report.influence_matrix.at(t, i) == 0);
            }
            CHECK(report.runs[static_cast<std::size_t>(t - 1)].observed ==
                  report.runs[static_cast<std::size_t>(t - 1)].expected);
        }
    }
}

TEST_CASE("deleting an isolated outlier lowers all later segment numbers") {
    // 0-mean, 100-mean segments with a big spike inside the first segment.
    std::vector<double> values;
    values.insert(values.end(), 10, 0.0);
    values[4] = 300.0;  // index 5 forms its own segment
    values.insert(values.end(), 10, 100.0);
    const TimeSeries ts(values);
    const auto cfg = config(6.0, 1.0);
    const InfluenceReport report = run_influence(ts, Method::Delete, cfg);
    REQUIRE(report.original.changepoints == std::vector<int>{4, 5, 10});
    CHECK(report.statuses[0] == Status::Outlier);
    CHECK(report.statuses[1] == Status::Outlier);

    CHECK(report.statuses[2] == Status::Stable);

    // Row 5 of D: the spike's own deletion removes its segment entirely.
    for (int i = 1; i <= 4; ++i) {
        CHECK(report.influence_matrix.at(5, i) == 0);
    }
    CHECK(report.influence_matrix.at(5, 5) == 0);  // NA slot contributes zero
    for (int i = 6; i <= 20; ++i) {
        CHECK(report.influence_matrix.at(5, i) == -1);
    }
    // The spike's expected boundary (read at the NA straddle position 5) is
    // not observed in its own run; everything else balances.
    CHECK(report.location_delta[4] == -1);
    CHECK(report.location_delta[3] == 0);
    CHECK(report.location_delta[9] == 0);
}

TEST_CASE("matrix and marginal stay consistent on random inputs") {
    SplitMix64 rng(35);
    for (int round = 0; round < 6; ++round) {
        const int n = 12 + static_cast<int>(rng.next() % 30);
        const TimeSeries ts(testutil::shifted_series(rng, n, 3));
        const Method method = round % 2 == 0 ? Method::Delete : Method::Contaminate;
        const InfluenceReport report = run_influence(ts, method, config(8.0, 1.0));

        long lhs = std::accumulate(report.location_delta.begin(), report.location_delta.end(), 0L);
        long rhs = 0;
        for (const auto& run : report.runs) {
            rhs += static_cast<long>(run.observed_changepoints.size());
            rhs -= static_cast<long>(run.expected.changepoints().size());
        }
        CHECK(lhs == rhs);

        // Row-zero equivalence: D[t,.] == 0 iff observed == expected.
        for (const auto& run : report.runs) {
            bool zero_row = true;
            for (int i = 1; i <= n; ++i) {
                if (report.influence_matrix.at(run.alteration.t, i) != 0) {
                    zero_row = false;
                    break;
                }
            }
            CHECK(zero_row == (run.observed == run.expected));
        }
    }
}

TEST_CASE("run_influence is identical across parallelism settings") {
    SplitMix64 rng(36);
    const TimeSeries ts(testutil::shifted_series(rng, 60, 3));
    const auto cfg = config(9.0, 1.0);
    InfluenceOptions serial;
    serial.parallelism = 1;
    InfluenceOptions parallel;
    parallel.parallelism = 8;
    for (const Method method : {Method::Delete, Method::Contaminate}) {
        const InfluenceReport a = run_influence(ts, method, cfg, serial);
        const InfluenceReport b = run_influence(ts, method, cfg, parallel);
        CHECK(a.location_delta == b.location_delta);
        CHECK(a.influence_matrix == b.influence_matrix);
        CHECK(a.statuses == b.statuses);
        CHECK(a.parameter_stability == b.parameter_stability);
    }
}

TEST_CASE("parameter stability on a constant series") {
    const int n = 12;
    const TimeSeries ts(std::vector<double>(n, 5.0));
    // Penalty large enough that even the contaminated point stays merged.
    DetectorConfig cfg = config(1e9, 1.0);
    for (const Method method : {Method::Delete, Method::Contaminate}) {
        InfluenceOptions options;
        options.contamination_offset = 3.0;  // range would be zero
        const InfluenceReport report = run_influence(ts, method, cfg, options);
        CHECK(report.original.changepoints.empty());
        for (int i = 1; i <= n; ++i) {
            const auto& entry = report.parameter_stability[static_cast<std::size_t>(i - 1)];
            REQUIRE(entry.size() == 1);
            if (method == Method::Delete) {
                CHECK(entry[0].count == n - 1);  // own run contributes NA
                CHECK(entry[0].value == 5.0);
            } else {
                CHECK(entry[0].count == n);
                CHECK(entry[0].value == round_significant(5.0 + 3.0 / n));
            }
        }
    }
}

TEST_CASE("round_significant") {
    CHECK(round_significant(0.0) == 0.0);
    CHECK(round_significant(1.0 / 3.0) == 0.333333333333);
    CHECK(round_significant(-1234.567890123456) == -1234.56789012);
    CHECK(round_significant(1e-15) == doctest::Approx(1e-15).epsilon(1e-11));
    const double a = 0.1 + 0.2;
    CHECK(round_significant(a) == round_significant(0.3));
}

TEST_CASE("deletion influence requires n >= 3") {
    CHECK_THROWS_AS(run_influence(TimeSeries({1.0, 2.0}), Method::Delete, config(1.0, 1.0)),
                    TooShortError);
}
