#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpflux/detect.hpp"
#include "cpflux/series.hpp"

namespace cpflux {

enum class Method { Delete, Contaminate };

enum class Status { Stable, Unstable, Outlier };

const char* to_string(Method m);
const char* to_string(Status s);

struct Alteration {
    Method method = Method::Delete;
    int t = 0;                          // altered index, 1-based
    double contamination_offset = 0.0;  // Contaminate only
};

/// Per-original-index segment numbers with at most one NA slot (the deleted
/// position). Ignoring the NA, labels start at 1, are non-decreasing, and
/// adjacent distinct labels differ by exactly one.
class LabeledSeries {
public:
    static constexpr int kNa = 0;

    LabeledSeries() = default;
    explicit LabeledSeries(std::vector<int> labels);  // validates the invariants

    int n() const { return static_cast<int>(labels_.size()); }
    int label(int t) const { return labels_[static_cast<std::size_t>(t - 1)]; }
    bool is_na(int t) const { return label(t) == kNa; }
    std::optional<int> na_slot() const;
    const std::vector<int>& labels() const { return labels_; }

    /// Changepoints of the labeled series in its own coordinates: for each
    /// label group g < G the changepoint is first_index(group g+1) - 1. An NA
    /// slot straddling a group boundary therefore counts as the end of the
    /// earlier group, which keeps an original changepoint "in place" when the
    /// observation at the changepoint itself is deleted.
    std::vector<int> changepoints() const;

    bool operator==(const LabeledSeries&) const = default;

private:
    std::vector<int> labels_;
};

struct AlterationRun {
    Alteration alteration;
    LabeledSeries observed;
    LabeledSeries expected;
    std::vector<int> observed_changepoints;  // original coordinates
    std::vector<double> observed_means;      // per original index; NaN at the deleted slot
};

struct MeanCount {
    double value = 0.0;  // rounded to 12 significant digits
    int count = 0;

    bool operator==(const MeanCount&) const = default;
};

/// Dense n-by-n signed integer matrix, row t = altered point, column i =
/// affected point.
class IntMatrix {
public:
    IntMatrix() = default;
    explicit IntMatrix(int n) : n_(n), cells_(static_cast<std::size_t>(n) * n, 0) {}

    int n() const { return n_; }
    std::int32_t at(int t, int i) const { return cells_[index(t, i)]; }
    void set(int t, int i, std::int32_t v) { cells_[index(t, i)] = v; }

    bool operator==(const IntMatrix&) const = default;

private:
    std::size_t index(int t, int i) const {
        return static_cast<std::size_t>(t - 1) * n_ + static_cast<std::size_t>(i - 1);
    }

    int n_ = 0;
    std::vector<std::int32_t> cells_;
};

struct InfluenceReport {
    std::vector<double> data;  // the original observations, for rendering
    Segmentation original;
    Method method = Method::Delete;

    // Config echo: every altered re-detection reuses these.
    double beta = 0.0;
    double sigma2 = 0.0;
    std::optional<double> contamination_offset;  // empty for Delete
    int min_segment_length = 1;

    std::vector<AlterationRun> runs;                          // n entries, indexed by t
    std::vector<Status> statuses;                             // per original changepoint
    std::vector<int> location_delta;                          // length n
    std::vector<std::vector<MeanCount>> parameter_stability;  // per index, sorted by value
    std::vector<double> original_index_means;                 // length n
    IntMatrix influence_matrix;
};

// --- Alterations -----------------------------------------------------------

TimeSeries apply_deletion(const TimeSeries& ts, int t);

/// Copy of ts with value[t] += offset. The conventional offset is twice the
/// data range, large enough that the contaminated point must form a segment
/// of its own (see check_outlier_threshold).
TimeSeries apply_contamination(const TimeSeries& ts, int t, double offset);

// --- Expected segmentations -------------------------------------------------

/// Original labels with slot t set to NA, renumbered so adjacent distinct
/// labels differ by one. Deleting a single-observation segment removes its
/// label; all other deletions leave the numbering unchanged.
LabeledSeries expected_deletion(const Segmentation& original, int t);

/// Original labels with changepoints added at t-1 and t (where valid and not
/// already present), renumbered: the contaminated point is expected to end up
/// in a segment of its own.
LabeledSeries expected_contamination(const Segmentation& original, int t);

/// Maps a segmentation of the altered series back to original coordinates:
/// index-for-index for Contaminate, with an NA slot at t for Delete.
LabeledSeries align_observed(const Segmentation& seg, const Alteration& alt, int n);

/// Sufficiency threshold: contamination value v placed at index t (inside
/// original segment [s, u] with fitted mean theta_hat) must split out its own
/// segment whenever 2*beta < (v - theta_hat)^2 / sigma2.
bool check_outlier_threshold(const CostModel& cm, const Segmentation& original, int t,
                             double beta, double v);

// --- Rolling procedure -------------------------------------------------------

struct InfluenceOptions {
    std::optional<double> contamination_offset;  // default: 2 * data_range(ts)
    bool reestimate_sigma2 = false;              // default: freeze the original fit's sigma2
    unsigned parallelism = 1;
};

/// Rolls through every t in 1..n, re-detects on the altered series with the
/// original beta and sigma2, aligns observed and expected segmentations, and
/// derives all diagnostic statistics. Either all n runs complete or the
/// whole call throws. Bit-reproducible for fixed inputs regardless of
/// parallelism.
InfluenceReport run_influence(const TimeSeries& ts, Method method, const DetectorConfig& cfg,
                              const InfluenceOptions& options = {});

// --- Derived statistics (exposed for testing; run_influence calls these) ----

/// Outlier: the changepoint bounds a single-observation segment of the
/// original segmentation. Unstable: not Outlier and absent from at least one
/// run's observed changepoints at its original (aligned) location. Stable
/// otherwise.
std::vector<Status> classify_changepoints(const Segmentation& original,
                                          const std::vector<AlterationRun>& runs);

/// delta[j] = #runs with an observed changepoint at j minus #runs with an
/// expected changepoint at j.
std::vector<int> location_stability(const std::vector<AlterationRun>& runs, int n);

/// Per index, the multiset of fitted segment means across runs (values
/// aggregated after rounding to 12 significant digits).
std::vector<std::vector<MeanCount>> parameter_stability(const std::vector<AlterationRun>& runs,
                                                        int n);

/// D[t, i] = observed_t.label(i) - expected_t.label(i), 0 where either is NA.
IntMatrix influence_matrix(const std::vector<AlterationRun>& runs, int n);

/// Rounds to 12 significant digits; used to aggregate equal means across
/// different summation orders.
double round_significant(double v, int digits = 12);

}  // namespace cpflux
