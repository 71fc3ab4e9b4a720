#include "cpflux/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cpflux/errors.hpp"

namespace cpflux {

namespace {

std::string num(double v) {
    if (v == 0.0) {
        return "0";
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string num17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&':
                out += "&amp;";
                break;
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

// Parses "#RRGGBB" and blends toward white: fraction 1 is the full color,
// fraction 0 is white.
std::string tint(const std::string& hex, double fraction) {
    int rgb[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k) {
        rgb[k] = std::stoi(hex.substr(1 + 2 * static_cast<std::size_t>(k), 2), nullptr, 16);
        rgb[k] = static_cast<int>(std::lround(255.0 + (rgb[k] - 255.0) * fraction));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02X%02X%02X", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string gray_for_count(int count, int total) {
    const double q = total > 0 ? static_cast<double>(count) / total : 1.0;
    const int lum = static_cast<int>(std::lround(PlotStyle::kLightest * (1.0 - q)));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02X%02X%02X", lum, lum, lum);
    return buf;
}

struct SvgDoc {
    int width;
    int height;
    std::string body;

    SvgDoc(int w, int h) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double stroke_width, const std::string& dash = "", const std::string& cls = "") {
        body += "<line";
        if (!cls.empty()) {
            body += " class=\"" + cls + "\"";
        }
        body += " x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
                num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) +
                "\"";
        if (!dash.empty()) {
            body += " stroke-dasharray=\"" + dash + "\"";
        }
        body += "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& cls = "", bool crisp = false) {
        body += "<rect";
        if (!cls.empty()) {
            body += " class=\"" + cls + "\"";
        }
        body += " x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
                num(h) + "\" fill=\"" + fill + "\"";
        if (crisp) {
            body += " shape-rendering=\"crispEdges\"";
        }
        body += "/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill,
                const std::string& cls = "") {
        body += "<circle";
        if (!cls.empty()) {
            body += " class=\"" + cls + "\"";
        }
        body += " cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
                fill + "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 12,
              const std::string& anchor = "start", const std::string& fill = "#000000",
              const std::string& transform = "") {
        body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"DejaVu Sans, sans-serif\" font-size=\"" +
                std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\"";
        if (!transform.empty()) {
            body += " transform=\"" + transform + "\"";
        }
        body += ">" + xml_escape(s) + "</text>\n";
    }

    void polyline(const std::string& points, const std::string& stroke, double stroke_width) {
        body += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + stroke +
                "\" stroke-width=\"" + num(stroke_width) + "\"/>\n";
    }

    std::string finish() const {
        std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
               "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
               std::to_string(width) + " " + std::to_string(height) + "\">\n";
        out += "<rect width=\"" + std::to_string(width) + "\" height=\"" +
               std::to_string(height) + "\" fill=\"#FFFFFF\"/>\n";
        out += body;
        out += "</svg>\n";
        return out;
    }
};

// Plot area with an index domain [0, n] on x and a value domain on y.
// Index centers sit at i - 0.5; segment boundaries at integer positions.
struct Frame {
    double px0, px1, py0, py1;  // pixel bounds; py0 is the top edge
    double dx0, dx1, dy0, dy1;

    double x(double v) const { return px0 + (v - dx0) / (dx1 - dx0) * (px1 - px0); }
    double y(double v) const { return py1 - (v - dy0) / (dy1 - dy0) * (py1 - py0); }
    double x_center(int i) const { return x(i - 0.5); }
};

constexpr double kMarginLeft = 58.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 32.0;
constexpr double kMarginBottom = 44.0;

Frame make_frame(int width, int height, double n, double lo, double hi) {
    double pad = (hi - lo) * 0.05;
    if (pad <= 0.0) {
        pad = 1.0;
    }
    return Frame{kMarginLeft,
                 width - kMarginRight,
                 kMarginTop,
                 height - kMarginBottom,
                 0.0,
                 n,
                 lo - pad,
                 hi + pad};
}

double nice_step(double raw) {
    if (raw <= 0.0) {
        return 1.0;
    }
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double base = raw / mag;
    double mult = 10.0;
    if (base <= 1.0) {
        mult = 1.0;
    } else if (base <= 2.0) {
        mult = 2.0;
    } else if (base <= 5.0) {
        mult = 5.0;
    }
    return mult * mag;
}

void draw_axes(SvgDoc& svg, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
    svg.line(f.px0, f.py1, f.px1, f.py1, "#000000", 1.0);
    svg.line(f.px0, f.py0, f.px0, f.py1, "#000000", 1.0);

    const double xstep = nice_step((f.dx1 - f.dx0) / 5.0);
    for (double v = std::ceil(f.dx0 / xstep) * xstep; v <= f.dx1 + 1e-9; v += xstep) {
        if (v <= f.dx0) {
            continue;
        }
        svg.line(f.x(v), f.py1, f.x(v), f.py1 + 4, "#000000", 1.0);
        svg.text(f.x(v), f.py1 + 16, num(v), 11, "middle");
    }
    const double ystep = nice_step((f.dy1 - f.dy0) / 5.0);
    for (double v = std::ceil(f.dy0 / ystep) * ystep; v <= f.dy1 + 1e-9; v += ystep) {
        svg.line(f.px0 - 4, f.y(v), f.px0, f.y(v), "#000000", 1.0);
        svg.text(f.px0 - 7, f.y(v) + 4, num(v), 11, "end");
    }
    svg.text((f.px0 + f.px1) / 2.0, f.py1 + 32, x_label, 12, "middle");
    svg.text(16.0, (f.py0 + f.py1) / 2.0, y_label, 12, "middle", "#000000",
             "rotate(-90 16 " + num((f.py0 + f.py1) / 2.0) + ")");
}

struct LineStyle {
    std::string color;
    std::string dash;
};

LineStyle status_line_style(Status s, const PlotStyle& style) {
    switch (s) {
        case Status::Stable:
            return {style.stable, "8,6"};
        case Status::Unstable:
            return {style.unstable, "12,5,3,5"};
        default:
            return {style.outlier, "2,5"};
    }
}

void draw_data_polyline(SvgDoc& svg, const Frame& f, const std::vector<double>& data,
                        const PlotStyle& style) {
    std::string points;
    points.reserve(data.size() * 12);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!points.empty()) {
            points += " ";
        }
        points += num(f.x_center(static_cast<int>(i) + 1)) + "," + num(f.y(data[i]));
    }
    svg.polyline(points, style.data_line, 1.0);
}

void status_legend(SvgDoc& svg, const Frame& f, const PlotStyle& style) {
    const double lx = f.px1 - 150.0;
    double ly = f.py0 + 10.0;
    svg.rect(lx - 8, ly - 10, 158, 52, "#FFFFFF");
    const std::pair<Status, std::string> entries[] = {
        {Status::Stable, "stable"}, {Status::Unstable, "unstable"}, {Status::Outlier, "outlier"}};
    for (const auto& [status, label] : entries) {
        const LineStyle ls = status_line_style(status, style);
        svg.line(lx, ly, lx + 30, ly, ls.color, 2.0, ls.dash);
        svg.text(lx + 38, ly + 4, label, 11);
        ly += 16.0;
    }
}

std::pair<double, double> data_extent(const std::vector<double>& data) {
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    return {*lo, *hi};
}

}  // namespace

std::string render_dashboard(const InfluenceReport& report, const PlotStyle& style) {
    SvgDoc svg(style.width, style.height);
    const int n = report.original.n;
    const auto [lo, hi] = data_extent(report.data);
    const Frame f = make_frame(style.width, style.height, n, lo, hi);

    svg.text(f.px0, 20.0, std::string("Stability Dashboard (") + to_string(report.method) + ")",
             13);
    draw_axes(svg, f, "index", "value");
    draw_data_polyline(svg, f, report.data, style);
    for (std::size_t k = 0; k < report.original.changepoints.size(); ++k) {
        const int tau = report.original.changepoints[k];
        const LineStyle ls = status_line_style(report.statuses[k], style);
        svg.line(f.x(tau), f.py0, f.x(tau), f.py1, ls.color, 1.6, ls.dash, "cpt");
    }
    status_legend(svg, f, style);
    return svg.finish();
}

std::string render_location_stability(const InfluenceReport& report, const PlotStyle& style) {
    SvgDoc svg(style.width, style.height);
    const int n = report.original.n;
    int lo = 0;
    int hi = 0;
    for (const int d : report.location_delta) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    const Frame f = make_frame(style.width, style.height, n, lo, hi);

    svg.text(f.px0, 20.0,
             std::string("Location Stability (") + to_string(report.method) + ")", 13);
    draw_axes(svg, f, "index", "observed - expected changepoint count");
    svg.line(f.px0, f.y(0.0), f.px1, f.y(0.0), "#000000", 1.0);

    const double bar_width = std::max(1.2, (f.px1 - f.px0) / n * 0.8);
    for (int j = 1; j <= n; ++j) {
        const int d = report.location_delta[static_cast<std::size_t>(j - 1)];
        if (d == 0) {
            continue;
        }
        std::string color = style.neutral;
        std::string dash;
        const auto& cpts = report.original.changepoints;
        const auto it = std::lower_bound(cpts.begin(), cpts.end(), j);
        if (it != cpts.end() && *it == j) {
            const LineStyle ls =
                status_line_style(report.statuses[static_cast<std::size_t>(it - cpts.begin())],
                                  style);
            color = ls.color;
            dash = ls.dash;
        }
        svg.line(f.x_center(j), f.y(0.0), f.x_center(j), f.y(d), color, bar_width, dash, "bar");
    }
    return svg.finish();
}

std::string render_parameter_stability(const InfluenceReport& report, const PlotStyle& style) {
    SvgDoc svg(style.width, style.height);
    const int n = report.original.n;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& per_index : report.parameter_stability) {
        for (const auto& mc : per_index) {
            lo = std::min(lo, mc.value);
            hi = std::max(hi, mc.value);
        }
    }
    for (const double m : report.original_index_means) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const Frame f = make_frame(style.width, style.height, n, lo, hi);

    svg.text(f.px0, 20.0,
             std::string("Parameter Stability (") + to_string(report.method) + ")", 13);
    draw_axes(svg, f, "index", "segment mean");

    for (int i = 1; i <= n; ++i) {
        for (const auto& mc : report.parameter_stability[static_cast<std::size_t>(i - 1)]) {
            svg.line(f.x(i - 1.0), f.y(mc.value), f.x(static_cast<double>(i)), f.y(mc.value),
                     gray_for_count(mc.count, n), 1.0, "", "tick");
        }
    }
    // Original means drawn last and thick, so any gray visible around them is
    // a real deviation.
    for (int i = 1; i <= report.original.num_segments(); ++i) {
        const auto [s, u] = report.original.segment_bounds(i);
        const double m = report.original.segment_means[static_cast<std::size_t>(i - 1)];
        svg.line(f.x(s - 1.0), f.y(m), f.x(static_cast<double>(u)), f.y(m), style.original_param,
                 3.5, "", "origmean");
    }
    return svg.finish();
}

std::string render_influence_map(const InfluenceReport& report, const PlotStyle& style) {
    SvgDoc svg(style.map_size, style.map_size);
    const int n = report.original.n;
    const Frame f = make_frame(style.map_size, style.map_size, n, 0.0, static_cast<double>(n));
    // y domain is the altered index t in [0, n]; row t spans y(t-1)..y(t)
    // with t = 1 at the bottom.

    svg.text(f.px0, 20.0, std::string("Influence Map (") + to_string(report.method) + ")", 13);
    draw_axes(svg, f, "affected data point", "altered data point");

    const auto& d = report.influence_matrix;
    const double cell_h = (f.py1 - f.py0) / n;
    for (int t = 1; t <= n; ++t) {
        const double ytop = f.y(static_cast<double>(t));
        int i = 1;
        while (i <= n) {
            const int v = d.at(t, i);
            if (v == 0) {
                ++i;
                continue;
            }
            int j = i;
            while (j + 1 <= n && d.at(t, j + 1) == v) {
                ++j;
            }
            const double frac =
                std::min(std::abs(v), style.saturation) / static_cast<double>(style.saturation);
            const std::string fill = tint(v > 0 ? style.increase : style.decrease, frac);
            svg.rect(f.x(i - 1.0), ytop, f.x(static_cast<double>(j)) - f.x(i - 1.0), cell_h, fill,
                     "cell", true);
            i = j + 1;
        }
    }

    const double radius = std::max(3.0, cell_h * 0.7);
    for (std::size_t k = 0; k < report.original.changepoints.size(); ++k) {
        if (report.statuses[k] == Status::Stable) {
            continue;
        }
        const int tau = report.original.changepoints[k];
        const LineStyle ls = status_line_style(report.statuses[k], style);
        svg.circle(f.x(static_cast<double>(tau)), f.y(static_cast<double>(tau)), radius, ls.color,
                   "cptmark");
    }

    const double lx = f.px1 - 190.0;
    svg.rect(lx - 8, f.py0 + 2, 196, 40, "#FFFFFF");
    svg.rect(lx, f.py0 + 8, 14, 10, style.increase);
    svg.text(lx + 20, f.py0 + 17, "segment number above expected", 10);
    svg.rect(lx, f.py0 + 24, 14, 10, style.decrease);
    svg.text(lx + 20, f.py0 + 33, "segment number below expected", 10);
    return svg.finish();
}

std::string render_detection(const TimeSeries& ts, const Segmentation& seg,
                             const PlotStyle& style) {
    SvgDoc svg(style.width, style.height);
    const auto [lo, hi] = data_extent(ts.values());
    const Frame f = make_frame(style.width, style.height, seg.n, lo, hi);

    svg.text(f.px0, 20.0,
             "Detected changepoints (m=" + std::to_string(seg.num_changepoints()) + ")", 13);
    draw_axes(svg, f, "index", "value");
    draw_data_polyline(svg, f, ts.values(), style);
    for (const int tau : seg.changepoints) {
        svg.line(f.x(tau), f.py0, f.x(tau), f.py1, style.decrease, 1.6, "8,6", "cpt");
    }
    for (int i = 1; i <= seg.num_segments(); ++i) {
        const auto [s, u] = seg.segment_bounds(i);
        const double m = seg.segment_means[static_cast<std::size_t>(i - 1)];
        svg.line(f.x(s - 1.0), f.y(m), f.x(static_cast<double>(u)), f.y(m), style.original_param,
                 2.5, "", "mean");
    }
    return svg.finish();
}

// --- Machine-readable exports ------------------------------------------------

ReportSummary summary_of(const InfluenceReport& report) {
    ReportSummary s;
    s.method = to_string(report.method);
    s.n = report.original.n;
    s.beta = report.beta;
    s.sigma2 = report.sigma2;
    s.contamination_offset = report.contamination_offset;
    s.min_segment_length = report.min_segment_length;
    s.changepoints = report.original.changepoints;
    s.segment_means = report.original.segment_means;
    s.total_penalized_cost = report.original.total_penalized_cost;
    for (const Status st : report.statuses) {
        s.statuses.emplace_back(to_string(st));
    }
    s.location_delta = report.location_delta;
    s.original_index_means = report.original_index_means;
    s.parameter_stability = report.parameter_stability;
    for (int t = 1; t <= s.n; ++t) {
        for (int i = 1; i <= s.n; ++i) {
            const int v = report.influence_matrix.at(t, i);
            if (v != 0) {
                s.influence_cells.push_back({t, i, v});
            }
        }
    }
    return s;
}

nlohmann::ordered_json report_to_json(const InfluenceReport& report) {
    const ReportSummary s = summary_of(report);
    nlohmann::ordered_json j;
    j["schema_version"] = "1";
    j["method"] = s.method;
    j["n"] = s.n;
    j["config"]["beta"] = s.beta;
    j["config"]["sigma2"] = s.sigma2;
    if (s.contamination_offset) {
        j["config"]["contamination_offset"] = *s.contamination_offset;
    } else {
        j["config"]["contamination_offset"] = nullptr;
    }
    j["config"]["min_segment_length"] = s.min_segment_length;
    j["original"]["changepoints"] = s.changepoints;
    j["original"]["segment_means"] = s.segment_means;
    j["original"]["total_penalized_cost"] = s.total_penalized_cost;
    auto statuses = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < s.changepoints.size(); ++k) {
        statuses.push_back({{"changepoint", s.changepoints[k]}, {"status", s.statuses[k]}});
    }
    j["statuses"] = std::move(statuses);
    j["location_delta"] = s.location_delta;
    j["original_index_means"] = s.original_index_means;
    auto params = nlohmann::ordered_json::array();
    for (const auto& per_index : s.parameter_stability) {
        auto entry = nlohmann::ordered_json::array();
        for (const auto& mc : per_index) {
            entry.push_back({mc.value, mc.count});
        }
        params.push_back(std::move(entry));
    }
    j["parameter_stability"] = std::move(params);
    auto cells = nlohmann::ordered_json::array();
    for (const auto& cell : s.influence_cells) {
        cells.push_back({cell[0], cell[1], cell[2]});
    }
    j["influence_matrix"] = std::move(cells);
    return j;
}

ReportSummary import_report(const nlohmann::json& doc) {
    if (!doc.contains("schema_version") || doc.at("schema_version").get<std::string>() != "1") {
        throw Error("unsupported report schema version");
    }
    ReportSummary s;
    s.method = doc.at("method").get<std::string>();
    s.n = doc.at("n").get<int>();
    const auto& config = doc.at("config");
    s.beta = config.at("beta").get<double>();
    s.sigma2 = config.at("sigma2").get<double>();
    if (!config.at("contamination_offset").is_null()) {
        s.contamination_offset = config.at("contamination_offset").get<double>();
    }
    s.min_segment_length = config.at("min_segment_length").get<int>();
    const auto& original = doc.at("original");
    s.changepoints = original.at("changepoints").get<std::vector<int>>();
    s.segment_means = original.at("segment_means").get<std::vector<double>>();
    s.total_penalized_cost = original.at("total_penalized_cost").get<double>();
    for (const auto& entry : doc.at("statuses")) {
        s.statuses.push_back(entry.at("status").get<std::string>());
    }
    s.location_delta = doc.at("location_delta").get<std::vector<int>>();
    s.original_index_means = doc.at("original_index_means").get<std::vector<double>>();
    for (const auto& per_index : doc.at("parameter_stability")) {
        std::vector<MeanCount> entry;
        for (const auto& pair : per_index) {
            entry.push_back(MeanCount{pair.at(0).get<double>(), pair.at(1).get<int>()});
        }
        s.parameter_stability.push_back(std::move(entry));
    }
    for (const auto& cell : doc.at("influence_matrix")) {
        s.influence_cells.push_back(
            {cell.at(0).get<int>(), cell.at(1).get<int>(), cell.at(2).get<int>()});
    }
    return s;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace

std::vector<std::string> export_report(const InfluenceReport& report, ExportFormat format,
                                       const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir + ": " + ec.message());
    }
    const std::filesystem::path base(dir);
    std::vector<std::string> files;

    if (format == ExportFormat::Json) {
        write_file(base / "report.json", report_to_json(report).dump(1) + "\n");
        files.push_back("report.json");
        return files;
    }

    const ReportSummary s = summary_of(report);
    const char* crlf = "\r\n";
    {
        std::string csv = std::string("changepoint,status") + crlf;
        for (std::size_t k = 0; k < s.changepoints.size(); ++k) {
            csv += std::to_string(s.changepoints[k]) + "," + s.statuses[k] + crlf;
        }
        write_file(base / "statuses.csv", csv);
        files.push_back("statuses.csv");
    }
    {
        std::string csv = std::string("index,delta") + crlf;
        for (int j = 1; j <= s.n; ++j) {
            csv += std::to_string(j) + "," +
                   std::to_string(s.location_delta[static_cast<std::size_t>(j - 1)]) + crlf;
        }
        write_file(base / "location_stability.csv", csv);
        files.push_back("location_stability.csv");
    }
    {
        std::string csv = std::string("index,mean,count") + crlf;
        for (int i = 1; i <= s.n; ++i) {
            for (const auto& mc : s.parameter_stability[static_cast<std::size_t>(i - 1)]) {
                csv += std::to_string(i) + "," + num17(mc.value) + "," +
                       std::to_string(mc.count) + crlf;
            }
        }
        write_file(base / "parameter_stability.csv", csv);
        files.push_back("parameter_stability.csv");
    }
    {
        std::string csv = std::string("altered,affected,difference") + crlf;
        for (const auto& cell : s.influence_cells) {
            csv += std::to_string(cell[0]) + "," + std::to_string(cell[1]) + "," +
                   std::to_string(cell[2]) + crlf;
        }
        write_file(base / "influence_matrix.csv", csv);
        files.push_back("influence_matrix.csv");
    }
    {
        std::string csv = std::string("segment,start,end,mean") + crlf;
        for (int i = 1; i <= report.original.num_segments(); ++i) {
            const auto [st, u] = report.original.segment_bounds(i);
            csv += std::to_string(i) + "," + std::to_string(st) + "," + std::to_string(u) + "," +
                   num17(report.original.segment_means[static_cast<std::size_t>(i - 1)]) + crlf;
        }
        write_file(base / "segmentation.csv", csv);
        files.push_back("segmentation.csv");
    }
    return files;
}

}  // namespace cpflux
