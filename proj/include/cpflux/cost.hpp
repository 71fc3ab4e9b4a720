#pragma once

#include <vector>

#include "cpflux/series.hpp"

namespace cpflux {

/// Per-observation loss for the Normal change-in-mean model:
/// twice the negative log-likelihood up to segment-constant terms,
/// (y - theta)^2 / sigma2.
double point_cost(double y, double theta, double sigma2);

namespace detail {

/// Canonical segment-cost arithmetic, shared by CostModel::segment_cost and
/// the detector's inner loop so both produce bit-identical values. s, t are
/// 1-based inclusive and assumed in range. The division by len is kept (not
/// a reciprocal multiply) so constant segments cost exactly zero.
inline double segment_cost_raw(const double* prefix_sum, const double* prefix_sumsq,
                               double inv_sigma2, int s, int t) {
    if (s == t) {
        return 0.0;  // exact; the prefix route leaves cancellation residue
    }
    const double sum = prefix_sum[t] - prefix_sum[s - 1];
    const double sumsq = prefix_sumsq[t] - prefix_sumsq[s - 1];
    const double raw = sumsq - sum * sum / static_cast<double>(t - s + 1);
    // raw >= 0 mathematically; cancellation can leave ~1e-9-relative negatives.
    return (raw > 0.0 ? raw : 0.0) * inv_sigma2;
}

}  // namespace detail

/// O(1) minimized segment costs for the Normal-mean loss after O(n)
/// prefix-sum construction. Immutable once built; concurrent queries are
/// safe.
class CostModel {
public:
    CostModel(const TimeSeries& ts, double sigma2);

    int n() const { return static_cast<int>(prefix_sum_.size()) - 1; }
    double sigma2() const { return sigma2_; }

    /// min over theta of sum_{j=s}^{t} (y_j - theta)^2 / sigma2, attained at
    /// the segment mean. Tiny negatives from cancellation are clamped to 0
    /// (tolerance 1e-9 relative; see kRelativeTolerance).
    double segment_cost(int s, int t) const;

    /// Arithmetic mean of y_s..y_t, the minimizing theta.
    double segment_mean(int s, int t) const;

    double prefix_sum(int i) const { return prefix_sum_[static_cast<std::size_t>(i)]; }
    double prefix_sumsq(int i) const { return prefix_sumsq_[static_cast<std::size_t>(i)]; }

    // Raw views for the detector's inner loop.
    const double* prefix_sum_data() const { return prefix_sum_.data(); }
    const double* prefix_sumsq_data() const { return prefix_sumsq_.data(); }
    double inv_sigma2() const { return inv_sigma2_; }

    static constexpr double kRelativeTolerance = 1e-9;

private:
    void check_range(int s, int t) const;

    std::vector<double> prefix_sum_;    // length n+1, prefix_sum_[0] = 0
    std::vector<double> prefix_sumsq_;  // length n+1
    double sigma2_;
    double inv_sigma2_;
};

CostModel build_cost(const TimeSeries& ts, double sigma2);

}  // namespace cpflux
