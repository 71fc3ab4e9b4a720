#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cpflux/cost.hpp"

namespace cpflux {

/// A segmentation of indices 1..n. changepoints[i-1] = tau_i is the LAST
/// index of segment i, so with tau_0 = 0 and tau_{m+1} = n segment i covers
/// tau_{i-1}+1 .. tau_i.
struct Segmentation {
    std::vector<int> changepoints;      // strictly increasing, each in {1..n-1}
    int n = 0;
    std::vector<double> segment_means;  // m+1 entries
    double total_penalized_cost = 0.0;

    int num_changepoints() const { return static_cast<int>(changepoints.size()); }
    int num_segments() const { return num_changepoints() + 1; }

    /// 1-based segment number containing index t.
    int segment_of(int t) const;

    /// Inclusive bounds [s, u] of 1-based segment i.
    std::pair<int, int> segment_bounds(int i) const;

    /// Per-index segment numbers (length n).
    std::vector<int> labels() const;
};

struct DetectorConfig {
    double beta = 0.0;                          // penalty per segment, > 0
    std::optional<double> sigma2_override;      // consumed when building the CostModel
    int min_segment_length = 1;
};

/// SIC-style default penalty 2*log(n). The Normal-mean loss already divides
/// by sigma2, so the penalty lives on the same scale regardless of noise
/// level; sigma2 is accepted for validation only.
double default_beta(int n, double sigma2);

/// Exact minimizer of the penalized cost
///   sum_j [ C(y_{tau_j + 1 : tau_{j+1}}) + beta ]
/// via the pruned dynamic program
///   F(t) = min_{t' < t} [ F(t') + C(y_{t'+1:t}) + beta ],
/// keeping only candidates t' with F(t') + C(y_{t'+1:t}) <= F(t).
/// Ties break toward the fewest changepoints, then the smallest
/// last-changepoint index (applied recursively), so output is deterministic.
Segmentation pelt(const CostModel& cm, const DetectorConfig& cfg);

/// Same recursion and tie-breaking as pelt without candidate pruning; O(n^2).
Segmentation optimal_partition(const CostModel& cm, const DetectorConfig& cfg);

/// Enumerates all 2^(n-1) segmentations; n <= 14. Oracle for the two
/// dynamic programs, same tie-breaking.
Segmentation exhaustive(const CostModel& cm, const DetectorConfig& cfg);

/// Penalized cost of an explicit changepoint vector. All three solvers above
/// accumulate in this exact order, so equal changepoints give bit-equal
/// totals.
double penalized_cost(const CostModel& cm, const std::vector<int>& changepoints, double beta);

/// Repeated single-point-deletion re-detection against one base series.
///
/// Deleting index t leaves the data before t untouched, so the dynamic
/// program for the shortened series shares its state with the base run up to
/// step t-1. The sweep checkpoints the candidate set at every step of the
/// base run and restarts from there; detect_without(t) is bit-identical to
/// pelt() on the shortened series built from scratch.
class DeletionSweep {
public:
    DeletionSweep(const TimeSeries& ts, const DetectorConfig& cfg, double sigma2);

    const Segmentation& original() const { return original_; }
    Segmentation detect_without(int t) const;

private:
    std::vector<double> values_;
    double beta_;
    double sigma2_;
    int min_segment_length_;
    Segmentation original_;
    std::vector<double> f_;
    std::vector<int> back_;
    std::vector<int> count_;
    std::vector<std::size_t> snapshot_offset_;  // per step, into snapshot_data_
    std::vector<int> snapshot_data_;            // candidate sets at step entry
};

}  // namespace cpflux
