#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cpflux/cost.hpp"
#include "cpflux/rng.hpp"
#include "cpflux/series.hpp"

namespace cpflux::testutil {

/// Random series of length n with values in roughly [-scale, scale].
inline std::vector<double> random_values(SplitMix64& rng, int n, double scale = 10.0) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) {
        x = (rng.uniform01() * 2.0 - 1.0) * scale;
    }
    return v;
}

/// Piecewise-constant series with large mean shifts plus unit noise, so the
/// range dominates the noise scale; used where contamination must provably
/// split out its own segment.
inline std::vector<double> shifted_series(SplitMix64& rng, int n, int segments) {
    std::vector<double> means;
    double mean = 0.0;
    for (int s = 0; s < segments; ++s) {
        means.push_back(mean);
        mean += (s % 2 == 0 ? 12.0 : -9.0);
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int seg = std::min(segments - 1, i * segments / n);
        v[static_cast<std::size_t>(i)] = rng.normal(means[static_cast<std::size_t>(seg)], 1.0);
    }
    return v;
}

/// The worked simulation recipe: n = 200, means 0 / 5 / 5 / 4 with an
/// atypical mean-15 observation at index 101, unit variances throughout.
inline std::vector<double> recipe_series(std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> v;
    v.reserve(200);
    for (int i = 1; i <= 200; ++i) {
        double mean = 0.0;
        if (i == 101) {
            mean = 15.0;
        } else if (i > 150) {
            mean = 4.0;
        } else if (i > 50) {
            mean = 5.0;
        }
        v.push_back(rng.normal(mean, 1.0));
    }
    return v;
}

/// Independent oracle for segment costs: scans a theta grid refined down to
/// 1e-9 around the best coarse value instead of using the closed form.
inline double grid_search_segment_cost(const std::vector<double>& y, int s, int t,
                                       double sigma2) {
    double lo = y[static_cast<std::size_t>(s - 1)];
    double hi = lo;
    for (int j = s; j <= t; ++j) {
        lo = std::min(lo, y[static_cast<std::size_t>(j - 1)]);
        hi = std::max(hi, y[static_cast<std::size_t>(j - 1)]);
    }
    auto total = [&](double theta) {
        double acc = 0.0;
        for (int j = s; j <= t; ++j) {
            const double r = y[static_cast<std::size_t>(j - 1)] - theta;
            acc += r * r;
        }
        return acc / sigma2;
    };
    double best_theta = lo;
    double width = hi - lo;
    if (width == 0.0) {
        return total(lo);
    }
    double center = (lo + hi) / 2.0;
    while (width > 1e-9) {
        double best = total(center);
        best_theta = center;
        for (int k = -50; k <= 50; ++k) {
            const double theta = center + width * k / 100.0;
            const double c = total(theta);
            if (c < best) {
                best = c;
                best_theta = theta;
            }
        }
        center = best_theta;
        width /= 25.0;
    }
    return total(best_theta);
}

}  // namespace cpflux::testutil
