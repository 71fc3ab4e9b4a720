#include "cpflux/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cpflux/errors.hpp"

namespace cpflux {

int Segmentation::segment_of(int t) const {
    if (t < 1 || t > n) {
        throw IndexOutOfRangeError("index " + std::to_string(t) + " outside 1.." +
                                   std::to_string(n));
    }
    const auto it = std::lower_bound(changepoints.begin(), changepoints.end(), t);
    return static_cast<int>(it - changepoints.begin()) + 1;
}

std::pair<int, int> Segmentation::segment_bounds(int i) const {
    if (i < 1 || i > num_segments()) {
        throw IndexOutOfRangeError("segment " + std::to_string(i) + " outside 1.." +
                                   std::to_string(num_segments()));
    }
    const int s = (i == 1) ? 1 : changepoints[static_cast<std::size_t>(i - 2)] + 1;
    const int u = (i == num_segments()) ? n : changepoints[static_cast<std::size_t>(i - 1)];
    return {s, u};
}

std::vector<int> Segmentation::labels() const {
    std::vector<int> out(static_cast<std::size_t>(n));
    int seg = 1;
    for (int t = 1; t <= n; ++t) {
        out[static_cast<std::size_t>(t - 1)] = seg;
        if (seg <= num_changepoints() && changepoints[static_cast<std::size_t>(seg - 1)] == t) {
            ++seg;
        }
    }
    return out;
}

double default_beta(int n, double sigma2) {
    if (n < 2) {
        throw TooShortError("default_beta needs n >= 2");
    }
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw InvalidSigmaError("sigma2 must be a positive finite real");
    }
    return 2.0 * std::log(static_cast<double>(n));
}

double penalized_cost(const CostModel& cm, const std::vector<int>& changepoints, double beta) {
    const int n = cm.n();
    int prev = 0;
    for (const int cp : changepoints) {
        if (cp <= prev || cp > n - 1) {
            throw InvalidChangepointsError("changepoints must be strictly increasing within 1.." +
                                           std::to_string(n - 1));
        }
        prev = cp;
    }
    double acc = 0.0;
    prev = 0;
    for (std::size_t j = 0; j <= changepoints.size(); ++j) {
        const int end = (j < changepoints.size()) ? changepoints[j] : n;
        acc += cm.segment_cost(prev + 1, end);
        acc += beta;
        prev = end;
    }
    return acc;
}

namespace {

void validate_config(const CostModel& cm, const DetectorConfig& cfg) {
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) {
        throw Error("beta must be a positive finite real");
    }
    if (cfg.min_segment_length < 1 || cfg.min_segment_length > cm.n()) {
        throw Error("min_segment_length must be in 1..n");
    }
}

Segmentation make_segmentation(const CostModel& cm, std::vector<int> cpts, double beta) {
    Segmentation seg;
    seg.n = cm.n();
    seg.changepoints = std::move(cpts);
    seg.segment_means.reserve(seg.changepoints.size() + 1);
    int prev = 0;
    for (std::size_t j = 0; j <= seg.changepoints.size(); ++j) {
        const int end = (j < seg.changepoints.size()) ? seg.changepoints[j] : seg.n;
        seg.segment_means.push_back(cm.segment_mean(prev + 1, end));
        prev = end;
    }
    seg.total_penalized_cost = penalized_cost(cm, seg.changepoints, beta);
    return seg;
}

std::vector<int> backtrack(const std::vector<int>& back, int n) {
    std::vector<int> cpts;
    for (int t = n; t > 0; t = back[static_cast<std::size_t>(t)]) {
        const int tp = back[static_cast<std::size_t>(t)];
        if (tp > 0) {
            cpts.push_back(tp);
        }
    }
    std::reverse(cpts.begin(), cpts.end());
    return cpts;
}

// Shared DP state. Candidate values accumulate as (F + C) + beta, the same
// association as penalized_cost, so exact float ties are comparable across
// solvers. Ties resolve to the lexicographic minimum of (value, changepoint
// count, tp); iterating tp in increasing order with strict-improvement
// replacement keeps the smallest tp among full ties.
struct DpState {
    std::vector<double> f;
    std::vector<int> back;
    std::vector<int> count;  // changepoints of the chosen segmentation of 1..t

    explicit DpState(int n)
        : f(static_cast<std::size_t>(n) + 1, std::numeric_limits<double>::infinity()),
          back(static_cast<std::size_t>(n) + 1, 0),
          count(static_cast<std::size_t>(n) + 1, 0) {
        f[0] = 0.0;
    }
};

// Candidate prefix ends in structure-of-arrays form: per candidate tp the
// fixed values F(tp), prefix sums at tp, and the tie-break changepoint count
// are cached at push time, keeping the hot loop on contiguous arrays.
struct CandidateSet {
    std::vector<int> tp;
    std::vector<double> f;
    std::vector<double> sum;
    std::vector<double> sumsq;
    std::vector<int> count;

    std::size_t size() const { return tp.size(); }

    void reserve(std::size_t n) {
        tp.reserve(n);
        f.reserve(n);
        sum.reserve(n);
        sumsq.reserve(n);
        count.reserve(n);
    }

    void push(int t, const DpState& dp, const double* prefix_sum, const double* prefix_sumsq) {
        tp.push_back(t);
        f.push_back(dp.f[static_cast<std::size_t>(t)]);
        sum.push_back(prefix_sum[t]);
        sumsq.push_back(prefix_sumsq[t]);
        count.push_back(dp.count[static_cast<std::size_t>(t)] + (t > 0 ? 1 : 0));
    }

    void compact(const std::vector<char>& keep, std::size_t limit) {
        std::size_t w = 0;
        for (std::size_t k = 0; k < size(); ++k) {
            if (k < limit && !keep[k]) {
                continue;
            }
            tp[w] = tp[k];
            f[w] = f[k];
            sum[w] = sum[k];
            sumsq[w] = sumsq[k];
            count[w] = count[k];
            ++w;
        }
        tp.resize(w);
        f.resize(w);
        sum.resize(w);
        sumsq.resize(w);
        count.resize(w);
    }
};

// Runs steps [first, last] of the pruned dynamic program. dp and cands must
// hold the state at entry to step `first`. When recording, the candidate set
// at the entry of every step is appended to snapshot_data with its offset in
// snapshot_offset (indexed by step).
void pelt_steps(const CostModel& cm, double beta, int len, int first, int last, DpState& dp,
                CandidateSet& cands, std::vector<std::size_t>* snapshot_offset,
                std::vector<int>* snapshot_data) {
    const double* prefix_sum = cm.prefix_sum_data();
    const double* prefix_sumsq = cm.prefix_sumsq_data();
    const double inv_sigma2 = cm.inv_sigma2();

    std::vector<double> bases;  // F(tp) + C(tp+1, t) per candidate
    std::vector<char> keep;
    bases.reserve(static_cast<std::size_t>(last) + 1);
    keep.reserve(static_cast<std::size_t>(last) + 1);
    cands.reserve(static_cast<std::size_t>(last) + 1);

    for (int t = first; t <= last; ++t) {
        if (snapshot_offset != nullptr) {
            (*snapshot_offset)[static_cast<std::size_t>(t)] = snapshot_data->size();
            snapshot_data->insert(snapshot_data->end(), cands.tp.begin(), cands.tp.end());
        }
        // Candidates are sorted, so the not-yet-usable ones (tp > t - len,
        // segment would be too short) form a suffix.
        std::size_t usable = cands.size();
        while (usable > 0 && cands.tp[usable - 1] > t - len) {
            --usable;
        }

        // Pass 1: candidate values, vectorizable elementwise arithmetic.
        bases.resize(usable);
        const double sum_t = prefix_sum[t];
        const double sumsq_t = prefix_sumsq[t];
        const double t_d = static_cast<double>(t);
        {
            const double* __restrict cand_sum = cands.sum.data();
            const double* __restrict cand_sumsq = cands.sumsq.data();
            const double* __restrict cand_f = cands.f.data();
            const int* __restrict cand_tp = cands.tp.data();
            double* __restrict out = bases.data();
            for (std::size_t k = 0; k < usable; ++k) {
                const double sum = sum_t - cand_sum[k];
                const double sumsq = sumsq_t - cand_sumsq[k];
                const double raw = sumsq - sum * sum / (t_d - static_cast<double>(cand_tp[k]));
                out[k] = cand_f[k] + (raw > 0.0 ? raw : 0.0) * inv_sigma2;
            }
        }
        // Single-point segments cost exactly zero; the prefix route leaves
        // cancellation residue, so patch the tp = t-1 candidate.
        if (usable > 0 && cands.tp[usable - 1] == t - 1) {
            bases[usable - 1] = cands.f[usable - 1];
        }

        // Pass 2: lexicographic minimum of (value, changepoint count, tp);
        // ascending tp with strict-improvement replacement keeps the
        // smallest tp among full ties. The running maximum decides whether
        // any candidate can be pruned at all.
        double best = std::numeric_limits<double>::infinity();
        double max_base = -std::numeric_limits<double>::infinity();
        int best_tp = -1;
        int best_count = std::numeric_limits<int>::max();
        for (std::size_t k = 0; k < usable; ++k) {
            const double base = bases[k];
            max_base = max_base > base ? max_base : base;
            const double val = base + beta;
            if (val < best) {
                best = val;
                best_tp = cands.tp[k];
                best_count = cands.count[k];
            } else if (val == best && cands.count[k] < best_count) {
                best_tp = cands.tp[k];
                best_count = cands.count[k];
            }
        }
        dp.f[static_cast<std::size_t>(t)] = best;
        dp.back[static_cast<std::size_t>(t)] = best_tp;
        dp.count[static_cast<std::size_t>(t)] = best_count;

        // Prune evaluated candidates failing F(tp) + C(tp+1, t) <= F(t);
        // the not-yet-usable suffix is retained untouched. Most steps prune
        // nothing, so the scan runs only when some base exceeds F(t).
        if (max_base > best) {
            keep.resize(usable);
            std::size_t survivors = 0;
            for (std::size_t k = 0; k < usable; ++k) {
                keep[k] = bases[k] <= best;
                survivors += static_cast<std::size_t>(keep[k]);
            }
            if (survivors != usable) {
                cands.compact(keep, usable);
            }
        }
        cands.push(t, dp, prefix_sum, prefix_sumsq);
    }
}

}  // namespace

Segmentation pelt(const CostModel& cm, const DetectorConfig& cfg) {
    validate_config(cm, cfg);
    const int n = cm.n();
    DpState dp(n);
    CandidateSet cands;
    cands.push(0, dp, cm.prefix_sum_data(), cm.prefix_sumsq_data());
    pelt_steps(cm, cfg.beta, cfg.min_segment_length, cfg.min_segment_length, n, dp, cands,
               nullptr, nullptr);
    return make_segmentation(cm, backtrack(dp.back, n), cfg.beta);
}

Segmentation optimal_partition(const CostModel& cm, const DetectorConfig& cfg) {
    validate_config(cm, cfg);
    const int n = cm.n();
    const double beta = cfg.beta;
    const int len = cfg.min_segment_length;
    const double* prefix_sum = cm.prefix_sum_data();
    const double* prefix_sumsq = cm.prefix_sumsq_data();
    const double inv_sigma2 = cm.inv_sigma2();

    DpState dp(n);
    for (int t = len; t <= n; ++t) {
        double best = std::numeric_limits<double>::infinity();
        int best_tp = -1;
        int best_count = std::numeric_limits<int>::max();
        for (int tp = 0; tp <= t - len; tp = (tp == 0 ? len : tp + 1)) {
            double val =
                dp.f[static_cast<std::size_t>(tp)] +
                detail::segment_cost_raw(prefix_sum, prefix_sumsq, inv_sigma2, tp + 1, t);
            val += beta;
            const int c = dp.count[static_cast<std::size_t>(tp)] + (tp > 0 ? 1 : 0);
            if (val < best || (val == best && c < best_count)) {
                best = val;
                best_tp = tp;
                best_count = c;
            }
        }
        dp.f[static_cast<std::size_t>(t)] = best;
        dp.back[static_cast<std::size_t>(t)] = best_tp;
        dp.count[static_cast<std::size_t>(t)] = best_count;
    }
    return make_segmentation(cm, backtrack(dp.back, n), beta);
}

namespace {

// Prefers the smaller last changepoint, then the smaller one before it, and
// so on. Only called on equal-length vectors (counts are compared first).
bool reverse_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    auto ia = a.rbegin();
    auto ib = b.rbegin();
    for (; ia != a.rend() && ib != b.rend(); ++ia, ++ib) {
        if (*ia != *ib) {
            return *ia < *ib;
        }
    }
    return false;
}

}  // namespace

DeletionSweep::DeletionSweep(const TimeSeries& ts, const DetectorConfig& cfg, double sigma2)
    : values_(ts.values()),
      beta_(cfg.beta),
      sigma2_(sigma2),
      min_segment_length_(cfg.min_segment_length) {
    const CostModel cm(ts, sigma2);
    validate_config(cm, cfg);
    const int n = cm.n();
    DpState dp(n);
    CandidateSet cands;
    cands.push(0, dp, cm.prefix_sum_data(), cm.prefix_sumsq_data());
    snapshot_offset_.assign(static_cast<std::size_t>(n) + 2, 0);
    pelt_steps(cm, beta_, min_segment_length_, min_segment_length_, n, dp, cands,
               &snapshot_offset_, &snapshot_data_);
    snapshot_offset_[static_cast<std::size_t>(n) + 1] = snapshot_data_.size();
    original_ = make_segmentation(cm, backtrack(dp.back, n), beta_);
    f_ = std::move(dp.f);
    back_ = std::move(dp.back);
    count_ = std::move(dp.count);
}

Segmentation DeletionSweep::detect_without(int t) const {
    const int n = static_cast<int>(values_.size());
    if (t < 1 || t > n) {
        throw IndexOutOfRangeError("index " + std::to_string(t) + " outside 1.." +
                                   std::to_string(n));
    }
    if (n - 1 < min_segment_length_) {
        throw TooShortError("shortened series is below min_segment_length");
    }
    std::vector<double> shortened;
    shortened.reserve(static_cast<std::size_t>(n) - 1);
    shortened.insert(shortened.end(), values_.begin(), values_.begin() + (t - 1));
    shortened.insert(shortened.end(), values_.begin() + t, values_.end());
    const CostModel cm(TimeSeries(std::move(shortened)), sigma2_);

    // State at entry to the restart step equals the base run's: the shortened
    // series shares the data prefix 1..t-1.
    const int restart = std::max(min_segment_length_, t);
    DpState dp(n - 1);
    std::copy(f_.begin(), f_.begin() + restart, dp.f.begin());
    std::copy(back_.begin(), back_.begin() + restart, dp.back.begin());
    std::copy(count_.begin(), count_.begin() + restart, dp.count.begin());
    CandidateSet cands;
    for (std::size_t k = snapshot_offset_[static_cast<std::size_t>(restart)];
         k < snapshot_offset_[static_cast<std::size_t>(restart) + 1]; ++k) {
        // The snapshot candidates all precede the deleted index, where the
        // shortened series' prefix sums match the base run's.
        cands.push(snapshot_data_[k], dp, cm.prefix_sum_data(), cm.prefix_sumsq_data());
    }
    pelt_steps(cm, beta_, min_segment_length_, restart, n - 1, dp, cands, nullptr, nullptr);
    return make_segmentation(cm, backtrack(dp.back, n - 1), beta_);
}

Segmentation exhaustive(const CostModel& cm, const DetectorConfig& cfg) {
    validate_config(cm, cfg);
    const int n = cm.n();
    if (n > 14) {
        throw TooLargeError("exhaustive enumeration is guarded to n <= 14, got " +
                            std::to_string(n));
    }
    const double beta = cfg.beta;
    const int len = cfg.min_segment_length;

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_cpts;
    bool have_best = false;

    std::vector<int> cpts;
    const std::uint32_t masks = 1u << (n - 1);
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        cpts.clear();
        bool valid = true;
        int prev = 0;
        for (int j = 1; j <= n - 1; ++j) {
            if (mask & (1u << (j - 1))) {
                if (j - prev < len) {
                    valid = false;
                    break;
                }
                cpts.push_back(j);
                prev = j;
            }
        }
        if (!valid || n - prev < len) {
            continue;
        }
        const double cost = penalized_cost(cm, cpts, beta);
        const bool better =
            !have_best || cost < best ||
            (cost == best && (cpts.size() < best_cpts.size() ||
                              (cpts.size() == best_cpts.size() && reverse_lex_less(cpts, best_cpts))));
        if (better) {
            best = cost;
            best_cpts = cpts;
            have_best = true;
        }
    }
    return make_segmentation(cm, std::move(best_cpts), beta);
}

}  // namespace cpflux
