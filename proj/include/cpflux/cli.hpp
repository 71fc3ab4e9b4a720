#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpflux {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConfig = 3;

struct RunConfig {
    std::string input;
    std::optional<std::string> column;
    std::optional<double> beta;    // empty = auto (2 log n)
    std::optional<double> sigma2;  // empty = auto (difference-based MAD)
    std::string method = "both";   // delete | contaminate | both
    double multiplier = 2.0;       // contamination offset = multiplier * range
    std::string out;
    std::vector<std::string> formats = {"svg", "json", "csv"};
    std::optional<unsigned> parallelism;  // empty = CPFLUX_THREADS or hardware
    std::uint64_t seed = 1;
    int reps = 100;
};

int cmd_detect(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_influence(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (without the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpflux
