#include "cpflux/influence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "cpflux/errors.hpp"
#include "cpflux/parallel.hpp"

namespace cpflux {

const char* to_string(Method m) {
    return m == Method::Delete ? "delete" : "contaminate";
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Stable:
            return "stable";
        case Status::Unstable:
            return "unstable";
        default:
            return "outlier";
    }
}

LabeledSeries::LabeledSeries(std::vector<int> labels) : labels_(std::move(labels)) {
    int na_count = 0;
    int prev = 0;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const int l = labels_[i];
        if (l == kNa) {
            ++na_count;
            continue;
        }
        if (prev == 0) {
            if (l != 1) {
                throw Error("labels must start at 1");
            }
        } else if (l != prev && l != prev + 1) {
            throw Error("adjacent distinct labels must differ by one");
        }
        prev = l;
    }
    if (na_count > 1) {
        throw Error("at most one NA slot is allowed");
    }
}

std::optional<int> LabeledSeries::na_slot() const {
    for (int t = 1; t <= n(); ++t) {
        if (is_na(t)) {
            return t;
        }
    }
    return std::nullopt;
}

std::vector<int> LabeledSeries::changepoints() const {
    std::vector<int> cpts;
    int prev = 0;
    for (int t = 1; t <= n(); ++t) {
        const int l = label(t);
        if (l == kNa) {
            continue;
        }
        if (prev != 0 && l != prev) {
            cpts.push_back(t - 1);
        }
        prev = l;
    }
    return cpts;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_index(int t, int n) {
    if (t < 1 || t > n) {
        throw IndexOutOfRangeError("index " + std::to_string(t) + " outside 1.." +
                                   std::to_string(n));
    }
}

// Canonical renumbering: skip NA slots, start at 1, bump the label whenever
// the raw label changes between consecutive non-NA positions.
std::vector<int> renumber(const std::vector<int>& raw) {
    std::vector<int> out(raw.size(), LabeledSeries::kNa);
    int next = 0;
    int prev_raw = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == LabeledSeries::kNa) {
            continue;
        }
        if (next == 0 || raw[i] != prev_raw) {
            ++next;
            prev_raw = raw[i];
        }
        out[i] = next;
    }
    return out;
}

}  // namespace

TimeSeries apply_deletion(const TimeSeries& ts, int t) {
    if (ts.n() < 3) {
        throw TooShortError("deletion needs n >= 3");
    }
    check_index(t, ts.n());
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(ts.n()) - 1);
    for (int i = 1; i <= ts.n(); ++i) {
        if (i != t) {
            values.push_back(ts.value(i));
        }
    }
    return TimeSeries(std::move(values));
}

TimeSeries apply_contamination(const TimeSeries& ts, int t, double offset) {
    check_index(t, ts.n());
    if (!std::isfinite(offset)) {
        throw Error("contamination offset must be finite");
    }
    std::vector<double> values = ts.values();
    values[static_cast<std::size_t>(t - 1)] += offset;
    return TimeSeries(std::move(values));
}

LabeledSeries expected_deletion(const Segmentation& original, int t) {
    check_index(t, original.n);
    std::vector<int> raw = original.labels();
    raw[static_cast<std::size_t>(t - 1)] = LabeledSeries::kNa;
    return LabeledSeries(renumber(raw));
}

LabeledSeries expected_contamination(const Segmentation& original, int t) {
    check_index(t, original.n);
    std::vector<int> cpts = original.changepoints;
    auto add = [&cpts](int cp) {
        const auto it = std::lower_bound(cpts.begin(), cpts.end(), cp);
        if (it == cpts.end() || *it != cp) {
            cpts.insert(it, cp);
        }
    };
    if (t > 1) {
        add(t - 1);
    }
    if (t < original.n) {
        add(t);
    }
    Segmentation widened;
    widened.n = original.n;
    widened.changepoints = std::move(cpts);
    return LabeledSeries(widened.labels());
}

LabeledSeries align_observed(const Segmentation& seg, const Alteration& alt, int n) {
    check_index(alt.t, n);
    const std::vector<int> altered = seg.labels();
    if (alt.method == Method::Delete) {
        if (seg.n != n - 1) {
            throw LengthMismatchError("deletion segmentation must cover n-1 points");
        }
        std::vector<int> raw(static_cast<std::size_t>(n), LabeledSeries::kNa);
        for (int i = 1; i <= n; ++i) {
            if (i < alt.t) {
                raw[static_cast<std::size_t>(i - 1)] = altered[static_cast<std::size_t>(i - 1)];
            } else if (i > alt.t) {
                raw[static_cast<std::size_t>(i - 1)] = altered[static_cast<std::size_t>(i - 2)];
            }
        }
        return LabeledSeries(renumber(raw));
    }
    if (seg.n != n) {
        throw LengthMismatchError("contamination segmentation must cover n points");
    }
    return LabeledSeries(renumber(altered));
}

bool check_outlier_threshold(const CostModel& cm, const Segmentation& original, int t,
                             double beta, double v) {
    check_index(t, original.n);
    const auto [s, u] = original.segment_bounds(original.segment_of(t));
    const double theta = cm.segment_mean(s, u);
    return 2.0 * beta < point_cost(v, theta, cm.sigma2());
}

std::vector<Status> classify_changepoints(const Segmentation& original,
                                          const std::vector<AlterationRun>& runs) {
    std::vector<Status> statuses;
    statuses.reserve(original.changepoints.size());
    for (int i = 1; i <= original.num_changepoints(); ++i) {
        const int tau = original.changepoints[static_cast<std::size_t>(i - 1)];
        const auto left = original.segment_bounds(i);
        const auto right = original.segment_bounds(i + 1);
        if (left.second - left.first == 0 || right.second - right.first == 0) {
            statuses.push_back(Status::Outlier);
            continue;
        }
        bool moved = false;
        for (const auto& run : runs) {
            // Deleting the observation right after tau leaves the NA slot at
            // tau+1; the aligned location of the boundary is then tau+1.
            const int pos = (run.alteration.method == Method::Delete &&
                             run.alteration.t == tau + 1)
                                ? tau + 1
                                : tau;
            const auto& cpts = run.observed_changepoints;
            if (!std::binary_search(cpts.begin(), cpts.end(), pos)) {
                moved = true;
                break;
            }
        }
        statuses.push_back(moved ? Status::Unstable : Status::Stable);
    }
    return statuses;
}

std::vector<int> location_stability(const std::vector<AlterationRun>& runs, int n) {
    std::vector<int> delta(static_cast<std::size_t>(n), 0);
    for (const auto& run : runs) {
        for (const int cp : run.observed_changepoints) {
            ++delta[static_cast<std::size_t>(cp - 1)];
        }
        for (const int cp : run.expected.changepoints()) {
            --delta[static_cast<std::size_t>(cp - 1)];
        }
    }
    return delta;
}

double round_significant(double v, int digits) {
    if (v == 0.0 || !std::isfinite(v)) {
        return v == 0.0 ? 0.0 : v;
    }
    const double exponent = std::floor(std::log10(std::fabs(v)));
    const double scale = std::pow(10.0, static_cast<double>(digits - 1) - exponent);
    const double r = std::round(v * scale) / scale;
    return r == 0.0 ? 0.0 : r;
}

std::vector<std::vector<MeanCount>> parameter_stability(const std::vector<AlterationRun>& runs,
                                                        int n) {
    std::vector<std::map<double, int>> acc(static_cast<std::size_t>(n));
    for (const auto& run : runs) {
        for (int i = 1; i <= n; ++i) {
            const double m = run.observed_means[static_cast<std::size_t>(i - 1)];
            if (std::isnan(m)) {
                continue;
            }
            ++acc[static_cast<std::size_t>(i - 1)][round_significant(m)];
        }
    }
    std::vector<std::vector<MeanCount>> out(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i].reserve(acc[i].size());
        for (const auto& [value, count] : acc[i]) {
            out[i].push_back(MeanCount{value, count});
        }
    }
    return out;
}

IntMatrix influence_matrix(const std::vector<AlterationRun>& runs, int n) {
    IntMatrix d(n);
    for (const auto& run : runs) {
        const int t = run.alteration.t;
        for (int i = 1; i <= n; ++i) {
            const int a = run.observed.label(i);
            const int b = run.expected.label(i);
            if (a != LabeledSeries::kNa && b != LabeledSeries::kNa) {
                d.set(t, i, a - b);
            }
        }
    }
    return d;
}

InfluenceReport run_influence(const TimeSeries& ts, Method method, const DetectorConfig& cfg,
                              const InfluenceOptions& options) {
    const int n = ts.n();
    if (method == Method::Delete && n < 3) {
        throw TooShortError("deletion influence needs n >= 3");
    }

    const double sigma2 = cfg.sigma2_override ? *cfg.sigma2_override : estimate_sigma2(ts);
    const CostModel cm(ts, sigma2);

    InfluenceReport report;
    report.data = ts.values();
    report.method = method;
    report.beta = cfg.beta;
    report.sigma2 = sigma2;
    report.min_segment_length = cfg.min_segment_length;
    report.original = pelt(cm, cfg);

    double offset = 0.0;
    if (method == Method::Contaminate) {
        offset = options.contamination_offset ? *options.contamination_offset
                                              : 2.0 * data_range(ts);
        report.contamination_offset = offset;
    }

    // The altered re-detections reuse the original fit's sigma2 (and beta) so
    // observed differences isolate the data alteration, not estimator drift.
    DetectorConfig altered_cfg = cfg;
    altered_cfg.sigma2_override = sigma2;

    report.runs.resize(static_cast<std::size_t>(n));
    const Segmentation& original = report.original;
    parallel_for(1, n + 1, options.parallelism, [&](int t) {
        AlterationRun run;
        run.alteration = Alteration{method, t, offset};
        const TimeSeries altered = method == Method::Delete
                                       ? apply_deletion(ts, t)
                                       : apply_contamination(ts, t, offset);
        const double s2 = options.reestimate_sigma2 ? estimate_sigma2(altered) : sigma2;
        const CostModel altered_cm(altered, s2);
        const Segmentation seg = pelt(altered_cm, altered_cfg);

        run.observed = align_observed(seg, run.alteration, n);
        run.expected = method == Method::Delete ? expected_deletion(original, t)
                                                : expected_contamination(original, t);
        run.observed_changepoints = run.observed.changepoints();

        // Fitted mean of the altered-data segment containing each original index.
        const std::vector<int> altered_labels = seg.labels();
        run.observed_means.assign(static_cast<std::size_t>(n), kNaN);
        for (int i = 1; i <= n; ++i) {
            int altered_index = i;
            if (method == Method::Delete) {
                if (i == t) {
                    continue;
                }
                altered_index = i < t ? i : i - 1;
            }
            const int lbl = altered_labels[static_cast<std::size_t>(altered_index - 1)];
            run.observed_means[static_cast<std::size_t>(i - 1)] =
                seg.segment_means[static_cast<std::size_t>(lbl - 1)];
        }
        report.runs[static_cast<std::size_t>(t - 1)] = std::move(run);
    });

    report.statuses = classify_changepoints(original, report.runs);
    report.location_delta = location_stability(report.runs, n);
    report.parameter_stability = parameter_stability(report.runs, n);
    report.influence_matrix = influence_matrix(report.runs, n);

    report.original_index_means.resize(static_cast<std::size_t>(n));
    const std::vector<int> original_labels = original.labels();
    for (int i = 1; i <= n; ++i) {
        report.original_index_means[static_cast<std::size_t>(i - 1)] =
            original.segment_means[static_cast<std::size_t>(original_labels[static_cast<std::size_t>(i - 1)] - 1)];
    }
    return report;
}

}  // namespace cpflux
