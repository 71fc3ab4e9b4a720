#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpflux {

/// Ordered univariate observations y_1..y_n.
///
/// Indices are 1-based everywhere in the public API. Values are finite by
/// construction and immutable afterwards, so instances can be shared
/// read-only across threads.
class TimeSeries {
public:
    explicit TimeSeries(std::vector<double> values);

    int n() const { return static_cast<int>(values_.size()); }
    double value(int t) const;  // t in {1..n}
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

struct SeriesStats {
    double min = 0.0;
    double max = 0.0;
    double range = 0.0;   // max - min
    double sigma2 = 0.0;  // noise-variance estimate
};

/// Reads one numeric column from RFC-4180 CSV text.
///
/// `column` selects by 1-based index when it parses as an integer, otherwise
/// by header name; when absent the first column is used. A header row is
/// auto-detected (a name selection implies one). Missing and non-finite
/// entries are rejected, never imputed.
TimeSeries load_csv(std::istream& source, const std::optional<std::string>& column = std::nullopt);

double data_range(const TimeSeries& ts);

/// Robust difference-based noise-variance estimate:
///   sigma_hat = MAD(first differences) / (0.6745 * sqrt(2)),
/// returned squared. Mean shifts touch only a few differences, so the
/// estimate is insensitive to the changepoint structure itself.
/// Throws DegenerateSeriesError when the MAD is zero; the caller must then
/// supply sigma2 explicitly.
double estimate_sigma2(const TimeSeries& ts);

/// min/max/range plus sigma2 (estimated unless an override is given).
SeriesStats series_stats(const TimeSeries& ts,
                         std::optional<double> sigma2_override = std::nullopt);

}  // namespace cpflux
