#include "cpflux/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>

#include "cpflux/errors.hpp"

namespace cpflux {

TimeSeries::TimeSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
        throw EmptyInputError("a series needs at least 2 observations, got " +
                              std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw EmptyInputError("non-finite value at index " + std::to_string(i + 1));
        }
    }
}

double TimeSeries::value(int t) const {
    if (t < 1 || t > n()) {
        throw IndexOutOfRangeError("index " + std::to_string(t) + " outside 1.." +
                                   std::to_string(n()));
    }
    return values_[static_cast<std::size_t>(t - 1)];
}

namespace {

// RFC-4180 state machine; handles quoted fields with embedded separators,
// doubled quotes and CRLF/LF record ends.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool any_char = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        any_char = false;
    };

    char c = 0;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                any_char = true;
                break;
            case ',':
                end_field();
                any_char = true;
                break;
            case '\r':
                break;  // consumed; the following \n ends the record
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                any_char = true;
                break;
        }
    }
    if (any_char || !field.empty() || !row.empty()) {
        end_record();
    }
    return rows;
}

std::string_view trimmed(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return std::string_view(s).substr(b, e - b);
}

bool parse_double(const std::string& raw, double& out) {
    const std::string_view sv = trimmed(raw);
    if (sv.empty()) {
        return false;
    }
    const char* first = sv.data();
    const char* last = sv.data() + sv.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_index(const std::string& s, int& out) {
    if (s.empty()) {
        return false;
    }
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && out >= 1;
}

}  // namespace

TimeSeries load_csv(std::istream& source, const std::optional<std::string>& column) {
    const auto rows = parse_csv(source);
    if (rows.empty()) {
        throw EmptyInputError("empty CSV input");
    }

    int col = 0;  // 0-based
    bool has_header = false;
    if (column) {
        int idx = 0;
        if (parse_index(*column, idx)) {
            col = idx - 1;
            if (col >= static_cast<int>(rows[0].size())) {
                throw ColumnNotFoundError("column index " + *column + " exceeds width " +
                                          std::to_string(rows[0].size()));
            }
        } else {
            // Selection by name requires a header row.
            const auto& header = rows[0];
            auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
                return std::string(trimmed(h)) == *column;
            });
            if (it == header.end()) {
                throw ColumnNotFoundError("no column named '" + *column + "'");
            }
            col = static_cast<int>(it - header.begin());
            has_header = true;
        }
    }
    if (!has_header) {
        // Auto-detect: a first row whose selected field is not numeric is a header.
        double probe = 0.0;
        if (col < static_cast<int>(rows[0].size()) && !parse_double(rows[0][col], probe)) {
            has_header = true;
        }
    }

    std::vector<double> values;
    values.reserve(rows.size());
    for (std::size_t r = has_header ? 1 : 0; r < rows.size(); ++r) {
        const int file_row = static_cast<int>(r) + 1;
        if (rows[r].size() == 1 && trimmed(rows[r][0]).empty()) {
            continue;  // blank line
        }
        if (col >= static_cast<int>(rows[r].size())) {
            throw ParseError(file_row, col + 1, "missing field");
        }
        double v = 0.0;
        if (!parse_double(rows[r][col], v)) {
            throw ParseError(file_row, col + 1, "cannot parse '" + rows[r][col] + "' as a real");
        }
        if (!std::isfinite(v)) {
            throw ParseError(file_row, col + 1, "non-finite value '" + rows[r][col] + "'");
        }
        values.push_back(v);
    }
    if (values.size() < 2) {
        throw EmptyInputError("need at least 2 observations, got " +
                              std::to_string(values.size()));
    }
    return TimeSeries(std::move(values));
}

double data_range(const TimeSeries& ts) {
    const auto [lo, hi] = std::minmax_element(ts.values().begin(), ts.values().end());
    return *hi - *lo;
}

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    const double upper = v[m];
    if (v.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(v.begin(), v.begin() + m);
    return 0.5 * (lower + upper);
}

}  // namespace

double estimate_sigma2(const TimeSeries& ts) {
    if (ts.n() < 3) {
        throw TooShortError("sigma2 estimation needs n >= 3");
    }
    const auto& y = ts.values();
    std::vector<double> diffs(y.size() - 1);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        diffs[i] = y[i + 1] - y[i];
    }
    std::vector<double> work = diffs;
    const double med = median_inplace(work);
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        work[i] = std::fabs(diffs[i] - med);
    }
    const double mad = median_inplace(work);
    if (mad == 0.0) {
        throw DegenerateSeriesError(
            "zero MAD of first differences; supply sigma2 explicitly");
    }
    const double sigma = mad / (0.6745 * std::sqrt(2.0));
    return sigma * sigma;
}

SeriesStats series_stats(const TimeSeries& ts, std::optional<double> sigma2_override) {
    SeriesStats stats;
    const auto [lo, hi] = std::minmax_element(ts.values().begin(), ts.values().end());
    stats.min = *lo;
    stats.max = *hi;
    stats.range = *hi - *lo;
    if (sigma2_override) {
        if (!(*sigma2_override > 0.0) || !std::isfinite(*sigma2_override)) {
            throw InvalidSigmaError("sigma2 must be a positive finite real");
        }
        stats.sigma2 = *sigma2_override;
    } else {
        stats.sigma2 = estimate_sigma2(ts);
    }
    return stats;
}

}  // namespace cpflux
