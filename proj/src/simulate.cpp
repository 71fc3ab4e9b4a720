#include "cpflux/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cpflux/detect.hpp"
#include "cpflux/parallel.hpp"
#include "cpflux/rng.hpp"

namespace cpflux {

namespace {

std::vector<double> generate_half_shift(int n, double delta, SplitMix64& rng) {
    std::vector<double> y(static_cast<std::size_t>(n));
    const int half = n / 2;
    for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = rng.normal(i < half ? 0.0 : delta, 1.0);
    }
    return y;
}

int nearest_changepoint(const std::vector<int>& cpts, int target) {
    int best = -1;
    int best_dist = std::numeric_limits<int>::max();
    for (const int cp : cpts) {
        const int dist = std::abs(cp - target);
        if (dist < best_dist) {
            best_dist = dist;
            best = cp;
        }
    }
    return best;
}

// Proportion of single-point deletions after which the detected changepoint
// differs from its expected location: deletions at or before the original
// estimate shift the expectation down by one, later deletions leave it
// unchanged.
double moved_proportion(int n, double delta, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const TimeSeries ts(generate_half_shift(n, delta, rng));

    DetectorConfig cfg;
    cfg.beta = default_beta(n, 1.0);
    const int truth = n / 2;

    const DeletionSweep sweep(ts, cfg, 1.0);  // the generating variance is known here
    const int tau = nearest_changepoint(sweep.original().changepoints, truth);
    if (tau < 0) {
        return 1.0;  // nothing detected: every deletion counts as moved
    }

    int moved = 0;
    for (int t = 1; t <= n; ++t) {
        const Segmentation seg = sweep.detect_without(t);
        const int expected = tau - (t <= tau ? 1 : 0);
        const int shifted_truth = truth - (t <= truth ? 1 : 0);
        const int found = nearest_changepoint(seg.changepoints, shifted_truth);
        if (found != expected) {
            ++moved;
        }
    }
    return static_cast<double>(moved) / n;
}

}  // namespace

std::vector<SimulationCell> run_deletion_study(const SimulationConfig& cfg) {
    std::vector<SimulationCell> cells;
    for (const int n : cfg.sizes) {
        for (const double delta : cfg.deltas) {
            std::vector<double> proportions(static_cast<std::size_t>(cfg.reps), 0.0);
            parallel_for(0, cfg.reps, cfg.parallelism, [&](int rep) {
                const std::uint64_t seed =
                    mix_seed(cfg.seed, static_cast<std::uint64_t>(n),
                             static_cast<std::uint64_t>(std::llround(delta * 1000.0)),
                             static_cast<std::uint64_t>(rep));
                proportions[static_cast<std::size_t>(rep)] = moved_proportion(n, delta, seed);
            });
            double mean = 0.0;
            for (const double p : proportions) {
                mean += p;
            }
            mean /= cfg.reps;
            double var = 0.0;
            for (const double p : proportions) {
                var += (p - mean) * (p - mean);
            }
            var = cfg.reps > 1 ? var / (cfg.reps - 1) : 0.0;
            SimulationCell cell;
            cell.n = n;
            cell.delta = delta;
            cell.reps = cfg.reps;
            cell.mean_proportion = mean;
            cell.std_error = std::sqrt(var / cfg.reps);
            cells.push_back(cell);
        }
    }
    return cells;
}

std::string simulation_csv(const std::vector<SimulationCell>& cells) {
    std::string csv = "n,delta,reps,mean_proportion,std_error,lower_2se,upper_2se\r\n";
    char buf[160];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%.17g,%.17g,%.17g,%.17g\r\n", c.n, c.delta,
                      c.reps, c.mean_proportion, c.std_error,
                      c.mean_proportion - 2.0 * c.std_error,
                      c.mean_proportion + 2.0 * c.std_error);
        csv += buf;
    }
    return csv;
}

std::string render_simulation_chart(const std::vector<SimulationCell>& cells,
                                    const PlotStyle& style) {
    // One line per delta over n; reuses the plot frame machinery indirectly
    // by building a tiny dedicated document here.
    std::vector<double> deltas;
    std::vector<int> sizes;
    double top = 0.0;
    for (const auto& c : cells) {
        if (std::find(deltas.begin(), deltas.end(), c.delta) == deltas.end()) {
            deltas.push_back(c.delta);
        }
        if (std::find(sizes.begin(), sizes.end(), c.n) == sizes.end()) {
            sizes.push_back(c.n);
        }
        top = std::max(top, c.mean_proportion + 2.0 * c.std_error);
    }
    std::sort(deltas.begin(), deltas.end());
    std::sort(sizes.begin(), sizes.end());
    if (top <= 0.0) {
        top = 0.01;
    }

    const int w = style.width;
    const int h = style.height;
    const double x0 = 58.0;
    const double x1 = w - 16.0;
    const double y0 = 32.0;
    const double y1 = h - 44.0;
    const double n_min = sizes.front();
    const double n_max = sizes.back();
    auto px = [&](double n) { return x0 + (n - n_min) / (n_max - n_min) * (x1 - x0); };
    auto py = [&](double p) { return y1 - p / (top * 1.05) * (y1 - y0); };
    auto numf = [](double v) {
        char b[40];
        std::snprintf(b, sizeof(b), "%.6g", v);
        return std::string(b);
    };

    const std::vector<std::string> palette = {style.decrease, style.stable, style.unstable,
                                              style.outlier, style.increase, style.neutral};

    std::string body;
    auto add_line = [&](double ax, double ay, double bx, double by, const std::string& stroke,
                        double width, const std::string& dash) {
        body += "<line x1=\"" + numf(ax) + "\" y1=\"" + numf(ay) + "\" x2=\"" + numf(bx) +
                "\" y2=\"" + numf(by) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                numf(width) + "\"";
        if (!dash.empty()) {
            body += " stroke-dasharray=\"" + dash + "\"";
        }
        body += "/>\n";
    };
    auto add_text = [&](double x, double y, const std::string& s, int size,
                        const std::string& anchor) {
        body += "<text x=\"" + numf(x) + "\" y=\"" + numf(y) +
                "\" font-family=\"DejaVu Sans, sans-serif\" font-size=\"" + std::to_string(size) +
                "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
    };

    add_line(x0, y1, x1, y1, "#000000", 1.0, "");
    add_line(x0, y0, x0, y1, "#000000", 1.0, "");
    for (const int n : sizes) {
        add_line(px(n), y1, px(n), y1 + 4, "#000000", 1.0, "");
        add_text(px(n), y1 + 16, std::to_string(n), 11, "middle");
    }
    for (int k = 0; k <= 4; ++k) {
        const double p = top * 1.05 * k / 4.0;
        add_line(x0 - 4, py(p), x0, py(p), "#000000", 1.0, "");
        add_text(x0 - 7, py(p) + 4, numf(p), 11, "end");
    }
    add_text((x0 + x1) / 2.0, y1 + 32, "n", 12, "middle");
    add_text(x0, 20.0, "Deletion study: proportion of moved changepoints", 13, "start");

    for (std::size_t di = 0; di < deltas.size(); ++di) {
        const std::string& color = palette[di % palette.size()];
        std::string mean_points;
        std::string lo_points;
        std::string hi_points;
        for (const int n : sizes) {
            for (const auto& c : cells) {
                if (c.n == n && c.delta == deltas[di]) {
                    const auto join = [&](std::string& acc, double p) {
                        if (!acc.empty()) {
                            acc += " ";
                        }
                        acc += numf(px(n)) + "," + numf(py(std::max(0.0, p)));
                    };
                    join(mean_points, c.mean_proportion);
                    join(lo_points, c.mean_proportion - 2.0 * c.std_error);
                    join(hi_points, c.mean_proportion + 2.0 * c.std_error);
                }
            }
        }
        body += "<polyline points=\"" + mean_points + "\" fill=\"none\" stroke=\"" + color +
                "\" stroke-width=\"1.8\"/>\n";
        body += "<polyline points=\"" + lo_points + "\" fill=\"none\" stroke=\"" + color +
                "\" stroke-width=\"1\" stroke-dasharray=\"4,4\"/>\n";
        body += "<polyline points=\"" + hi_points + "\" fill=\"none\" stroke=\"" + color +
                "\" stroke-width=\"1\" stroke-dasharray=\"4,4\"/>\n";
        add_text(x1 - 60, y0 + 14 + 14 * static_cast<double>(di),
                 "delta=" + numf(deltas[di]), 11, "start");
        add_line(x1 - 90, y0 + 10 + 14 * static_cast<double>(di), x1 - 66,
                 y0 + 10 + 14 * static_cast<double>(di), color, 1.8, "");
    }

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
           "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
           std::to_string(h) + "\">\n";
    out += "<rect width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(h) +
           "\" fill=\"#FFFFFF\"/>\n";
    out += body;
    out += "</svg>\n";
    return out;
}

}  // namespace cpflux
