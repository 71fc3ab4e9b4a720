#include "cpflux/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpflux/detect.hpp"
#include "cpflux/errors.hpp"
#include "cpflux/influence.hpp"
#include "cpflux/parallel.hpp"
#include "cpflux/simulate.hpp"
#include "cpflux/viz.hpp"

namespace cpflux {

namespace {

namespace fs = std::filesystem;

struct ResolvedInput {
    TimeSeries ts;
    double sigma2;
    double beta;
    bool sigma2_estimated;
    bool beta_auto;
};

void validate_common(const RunConfig& cfg) {
    if (cfg.out.empty()) {
        throw Error("an output directory is required (--out)");
    }
    if (!(cfg.multiplier > 0.0)) {
        throw Error("--multiplier must be positive");
    }
    if (cfg.beta && !(*cfg.beta > 0.0)) {
        throw Error("--beta must be positive");
    }
    if (cfg.sigma2 && !(*cfg.sigma2 > 0.0)) {
        throw Error("--sigma2 must be positive");
    }
    if (cfg.method != "delete" && cfg.method != "contaminate" && cfg.method != "both") {
        throw Error("--method must be delete, contaminate or both");
    }
    for (const auto& f : cfg.formats) {
        if (f != "svg" && f != "json" && f != "csv") {
            throw Error("--format entries must be svg, json or csv");
        }
    }
    if (cfg.reps < 1) {
        throw Error("--reps must be at least 1");
    }
}

fs::path prepare_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw Error("cannot create output directory " + out + ": " + ec.message());
    }
    return fs::path(out);
}

ResolvedInput load_input(const RunConfig& cfg) {
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) {
        throw IoError("cannot open input file: " + cfg.input);
    }
    TimeSeries ts = load_csv(in, cfg.column);
    const double sigma2 = cfg.sigma2 ? *cfg.sigma2 : estimate_sigma2(ts);
    const double beta = cfg.beta ? *cfg.beta : default_beta(ts.n(), sigma2);
    return ResolvedInput{std::move(ts), sigma2, beta, !cfg.sigma2.has_value(),
                         !cfg.beta.has_value()};
}

unsigned resolve_parallelism(const RunConfig& cfg) {
    return cfg.parallelism ? *cfg.parallelism : default_parallelism();
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

// The manifest echoes analysis configuration only; execution details such as
// parallelism are omitted so artifact trees are comparable across settings.
void write_manifest(const fs::path& dir, const std::string& command,
                    nlohmann::ordered_json config, std::vector<std::string> files) {
    std::sort(files.begin(), files.end());
    nlohmann::ordered_json manifest;
    manifest["command"] = command;
    manifest["config"] = std::move(config);
    manifest["files"] = files;
    write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

bool wants(const RunConfig& cfg, const char* format) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

int run_command(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const EmptyInputError& e) {
        err << "input error: " << e.what() << "\n";
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
    } catch (const ColumnNotFoundError& e) {
        err << "input error: " << e.what() << "\n";
    } catch (const IoError& e) {
        err << "input error: " << e.what() << "\n";
    } catch (const DegenerateSeriesError& e) {
        err << "input error: " << e.what() << "\n";
    } catch (const TooShortError& e) {
        err << "input error: " << e.what() << "\n";
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInput;
}

nlohmann::ordered_json base_config_json(const RunConfig& cfg, const ResolvedInput& input) {
    nlohmann::ordered_json j;
    j["input"] = cfg.input;
    j["column"] = cfg.column ? nlohmann::ordered_json(*cfg.column) : nullptr;
    j["n"] = input.ts.n();
    j["beta"] = input.beta;
    j["beta_auto"] = input.beta_auto;
    j["sigma2"] = input.sigma2;
    j["sigma2_estimated"] = input.sigma2_estimated;
    return j;
}

}  // namespace

int cmd_detect(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return run_command(err, [&]() -> int {
        validate_common(cfg);
        const fs::path dir = prepare_out_dir(cfg.out);
        const ResolvedInput input = load_input(cfg);

        DetectorConfig dcfg;
        dcfg.beta = input.beta;
        dcfg.sigma2_override = input.sigma2;
        const CostModel cm(input.ts, input.sigma2);
        const Segmentation seg = pelt(cm, dcfg);

        std::vector<std::string> files;
        nlohmann::ordered_json j;
        j["schema_version"] = "1";
        j["config"] = base_config_json(cfg, input);
        j["changepoints"] = seg.changepoints;
        j["segment_means"] = seg.segment_means;
        j["total_penalized_cost"] = seg.total_penalized_cost;
        write_text(dir / "segmentation.json", j.dump(1) + "\n");
        files.push_back("segmentation.json");

        if (wants(cfg, "svg")) {
            write_text(dir / "detection.svg", render_detection(input.ts, seg, PlotStyle{}));
            files.push_back("detection.svg");
        }
        write_manifest(dir, "detect", base_config_json(cfg, input), files);

        out << "n=" << input.ts.n() << " beta=" << input.beta
            << (input.beta_auto ? " (auto)" : "") << " sigma2=" << input.sigma2
            << (input.sigma2_estimated ? " (estimated)" : "") << "\n";
        out << "changepoints=" << seg.num_changepoints() << ":";
        for (const int cp : seg.changepoints) {
            out << " " << cp;
        }
        out << "\n";
        out << "penalized_cost=" << seg.total_penalized_cost << "\n";
        return kExitOk;
    });
}

int cmd_influence(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return run_command(err, [&]() -> int {
        validate_common(cfg);
        const fs::path dir = prepare_out_dir(cfg.out);
        const ResolvedInput input = load_input(cfg);

        DetectorConfig dcfg;
        dcfg.beta = input.beta;
        dcfg.sigma2_override = input.sigma2;

        InfluenceOptions options;
        options.contamination_offset = cfg.multiplier * data_range(input.ts);
        options.parallelism = resolve_parallelism(cfg);

        std::vector<Method> methods;
        if (cfg.method == "delete" || cfg.method == "both") {
            methods.push_back(Method::Delete);
        }
        if (cfg.method == "contaminate" || cfg.method == "both") {
            methods.push_back(Method::Contaminate);
        }

        std::vector<std::string> files;
        const PlotStyle style;
        for (const Method method : methods) {
            const InfluenceReport report = run_influence(input.ts, method, dcfg, options);
            const std::string sub = to_string(method);
            const fs::path method_dir = dir / sub;
            std::error_code ec;
            fs::create_directories(method_dir, ec);
            if (ec) {
                throw IoError("cannot create " + method_dir.string() + ": " + ec.message());
            }

            if (wants(cfg, "svg")) {
                write_text(method_dir / "dashboard.svg", render_dashboard(report, style));
                write_text(method_dir / "location_stability.svg",
                           render_location_stability(report, style));
                write_text(method_dir / "parameter_stability.svg",
                           render_parameter_stability(report, style));
                write_text(method_dir / "influence_map.svg", render_influence_map(report, style));
                for (const char* name : {"dashboard.svg", "location_stability.svg",
                                         "parameter_stability.svg", "influence_map.svg"}) {
                    files.push_back(sub + "/" + name);
                }
            }
            if (wants(cfg, "json")) {
                for (const auto& name :
                     export_report(report, ExportFormat::Json, method_dir.string())) {
                    files.push_back(sub + "/" + name);
                }
            }
            if (wants(cfg, "csv")) {
                for (const auto& name :
                     export_report(report, ExportFormat::CsvBundle, method_dir.string())) {
                    files.push_back(sub + "/" + name);
                }
            }

            int stable = 0;
            int unstable = 0;
            int outlier = 0;
            for (const Status s : report.statuses) {
                if (s == Status::Stable) {
                    ++stable;
                } else if (s == Status::Unstable) {
                    ++unstable;
                } else {
                    ++outlier;
                }
            }
            out << sub << ": changepoints=" << report.original.num_changepoints()
                << " stable=" << stable << " unstable=" << unstable << " outlier=" << outlier
                << "\n";
        }

        nlohmann::ordered_json config = base_config_json(cfg, input);
        config["method"] = cfg.method;
        config["multiplier"] = cfg.multiplier;
        config["formats"] = cfg.formats;
        write_manifest(dir, "influence", std::move(config), files);
        return kExitOk;
    });
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return run_command(err, [&]() -> int {
        validate_common(cfg);
        const fs::path dir = prepare_out_dir(cfg.out);

        SimulationConfig scfg;
        scfg.seed = cfg.seed;
        scfg.reps = cfg.reps;
        scfg.parallelism = resolve_parallelism(cfg);
        const std::vector<SimulationCell> cells = run_deletion_study(scfg);

        std::vector<std::string> files;
        write_text(dir / "simulation.csv", simulation_csv(cells));
        files.push_back("simulation.csv");
        if (wants(cfg, "svg")) {
            write_text(dir / "simulation.svg", render_simulation_chart(cells, PlotStyle{}));
            files.push_back("simulation.svg");
        }

        nlohmann::ordered_json config;
        config["seed"] = cfg.seed;
        config["reps"] = cfg.reps;
        write_manifest(dir, "simulate", std::move(config), files);

        for (const auto& c : cells) {
            out << "n=" << c.n << " delta=" << c.delta << " mean_proportion=" << c.mean_proportion
                << " se=" << c.std_error << "\n";
        }
        return kExitOk;
    });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"changepoint influence diagnostics"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string beta_arg = "auto";
    std::string sigma2_arg = "auto";
    std::string column_arg;
    std::string parallelism_arg = "auto";
    std::string formats_arg = "svg,json,csv";

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        if (needs_input) {
            sub->add_option("--input", cfg.input, "input CSV file")->required();
            sub->add_option("--column", column_arg, "column name or 1-based index");
            sub->add_option("--beta", beta_arg, "penalty per segment, or 'auto' (2 log n)");
            sub->add_option("--sigma2", sigma2_arg, "noise variance, or 'auto' (estimated)");
        }
        sub->add_option("--out", cfg.out, "output directory")->required();
        sub->add_option("--format", formats_arg, "comma-separated subset of svg,json,csv");
        sub->add_option("--parallelism", parallelism_arg, "worker count or 'auto'");
    };

    CLI::App* detect = app.add_subcommand("detect", "detect mean changepoints in a CSV column");
    add_common(detect, true);

    CLI::App* influence =
        app.add_subcommand("influence", "per-observation deletion/contamination diagnostics");
    add_common(influence, true);
    influence->add_option("--method", cfg.method, "delete, contaminate or both");
    influence->add_option("--multiplier", cfg.multiplier,
                          "contamination offset as a multiple of the data range");

    CLI::App* simulate =
        app.add_subcommand("simulate", "deletion-expectation simulation study");
    add_common(simulate, false);
    simulate->add_option("--seed", cfg.seed, "PRNG seed");
    simulate->add_option("--reps", cfg.reps, "repetitions per (n, delta) cell");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "config error: " << e.get_name() << ": " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (!column_arg.empty()) {
            cfg.column = column_arg;
        }
        if (beta_arg != "auto") {
            cfg.beta = std::stod(beta_arg);
        }
        if (sigma2_arg != "auto") {
            cfg.sigma2 = std::stod(sigma2_arg);
        }
        if (parallelism_arg != "auto") {
            const long v = std::stol(parallelism_arg);
            if (v < 1) {
                throw Error("--parallelism must be at least 1");
            }
            cfg.parallelism = static_cast<unsigned>(v);
        }
        cfg.formats.clear();
        std::stringstream ss(formats_arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) {
                cfg.formats.push_back(item);
            }
        }
    } catch (const Error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception&) {
        err << "config error: numeric option could not be parsed\n";
        return kExitConfig;
    }

    if (detect->parsed()) {
        return cmd_detect(cfg, out, err);
    }
    if (influence->parsed()) {
        return cmd_influence(cfg, out, err);
    }
    return cmd_simulate(cfg, out, err);
}

}  // namespace cpflux
