#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpflux/influence.hpp"

namespace cpflux {

/// Fixed colors and canvas geometry for the diagnostic plots. Rendering is a
/// pure function of (report, style): identical inputs give byte-identical
/// SVG documents.
struct PlotStyle {
    int width = 960;
    int height = 480;
    int map_size = 720;  // influence map is square

    std::string stable = "#228833";    // dashed
    std::string unstable = "#EE7733";  // dot-dashed
    std::string outlier = "#CC3311";   // dotted
    std::string increase = "#B38B6D";  // taupe, positive influence
    std::string decrease = "#4477AA";  // blue, negative influence
    std::string original_param = "#CC3311";
    std::string neutral = "#000000";
    std::string data_line = "#555555";
    std::string changed_span = "#DDDDDD";

    /// |D| value at which heat-map intensity saturates.
    int saturation = 4;

    /// Gray ramp for parameter stability: frequency q = count/n maps to
    /// luminance round(kLightest * (1 - q)), so count = n is black and a
    /// single occurrence is the lightest visible gray.
    static constexpr int kLightest = 215;
};

std::string render_dashboard(const InfluenceReport& report, const PlotStyle& style);
std::string render_location_stability(const InfluenceReport& report, const PlotStyle& style);
std::string render_parameter_stability(const InfluenceReport& report, const PlotStyle& style);
std::string render_influence_map(const InfluenceReport& report, const PlotStyle& style);

/// Data + detected changepoints + segment means; the cmd_detect artifact.
std::string render_detection(const TimeSeries& ts, const Segmentation& seg,
                             const PlotStyle& style);

enum class ExportFormat { Json, CsvBundle };

/// The machine-readable statistics of a report: everything export_report
/// writes, and what import_report reads back.
struct ReportSummary {
    std::string method;
    int n = 0;
    double beta = 0.0;
    double sigma2 = 0.0;
    std::optional<double> contamination_offset;
    int min_segment_length = 1;

    std::vector<int> changepoints;
    std::vector<double> segment_means;
    double total_penalized_cost = 0.0;

    std::vector<std::string> statuses;  // parallel to changepoints
    std::vector<int> location_delta;
    std::vector<double> original_index_means;
    std::vector<std::vector<MeanCount>> parameter_stability;
    std::vector<std::array<int, 3>> influence_cells;  // (t, i, d), nonzero only, row-major

    bool operator==(const ReportSummary&) const = default;
};

ReportSummary summary_of(const InfluenceReport& report);

nlohmann::ordered_json report_to_json(const InfluenceReport& report);
ReportSummary import_report(const nlohmann::json& doc);

/// Writes report.json and/or the CSV bundle under `dir`; returns the file
/// names written (relative to dir).
std::vector<std::string> export_report(const InfluenceReport& report, ExportFormat format,
                                       const std::string& dir);

}  // namespace cpflux
