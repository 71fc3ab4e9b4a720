#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpflux/viz.hpp"

namespace cpflux {

/// Deletion-expectation study: half-N(0,1) / half-N(delta,1) series, one
/// deletion per index, counting how often the detected changepoint lands away
/// from its expected location.
struct SimulationConfig {
    std::uint64_t seed = 1;
    int reps = 100;
    std::vector<int> sizes = {100, 200, 300, 400, 500, 1000};
    std::vector<double> deltas = {1.0, 2.0, 3.0, 4.0, 5.0};
    unsigned parallelism = 1;
};

struct SimulationCell {
    int n = 0;
    double delta = 0.0;
    int reps = 0;
    double mean_proportion = 0.0;
    double std_error = 0.0;
};

std::vector<SimulationCell> run_deletion_study(const SimulationConfig& cfg);

/// CSV with per-cell mean moved-proportion and +/- two standard error bounds.
std::string simulation_csv(const std::vector<SimulationCell>& cells);

/// Line chart of mean proportion against n, one line per delta, dashed
/// two-standard-error envelopes.
std::string render_simulation_chart(const std::vector<SimulationCell>& cells,
                                    const PlotStyle& style);

}  // namespace cpflux
