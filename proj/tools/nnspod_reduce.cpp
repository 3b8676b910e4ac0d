// nnspod-reduce: snapshot generation, POD / shifted-POD / automatic
// shift-detection reduction, and report comparison for advection-dominated
// snapshot sets.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nnspod/auto_shift.hpp"
#include "nnspod/fom_advection.hpp"
#include "nnspod/format.hpp"
#include "nnspod/pod.hpp"
#include "nnspod/run_config.hpp"
#include "nnspod/shift.hpp"
#include "nnspod/snapshot.hpp"

namespace fs = std::filesystem;
using nnspod::ConfigError;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitThreshold = 4;
constexpr int kExitTraining = 5;

void ensure_clean_outputs(const fs::path& dir, const std::vector<std::string>& files,
                          bool force) {
    fs::create_directories(dir);
    if (force) return;
    for (const auto& f : files)
        if (fs::exists(dir / f))
            throw ConfigError("output '" + (dir / f).string() +
                              "' already exists; rerun with --force to overwrite");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os)
        throw nnspod::FormatError("cannot open '" + path.string() + "' for writing");
    os << text;
}

struct CommonOptions {
    std::string config_path;
    std::string output;
    std::string kind_override;
    bool force = false;
    std::optional<std::uint64_t> seed;
};

nnspod::RunConfig load_config(const CommonOptions& opts) {
    if (opts.config_path.empty())
        throw ConfigError("--config is required");
    nnspod::RunConfig cfg = nnspod::load_run_config(opts.config_path);
    if (!opts.output.empty()) cfg.output_dir = opts.output;
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.nnspod.seed = *opts.seed;
    }
    if (!opts.kind_override.empty()) {
        if (opts.kind_override != "constant" && opts.kind_override != "analytic" &&
            opts.kind_override != "deforming" && opts.kind_override != "csv")
            throw ConfigError("--kind must be constant, analytic, deforming or csv");
        cfg.fom.kind = opts.kind_override;
    }
    return cfg;
}

int cmd_generate(const CommonOptions& opts) {
    const nnspod::RunConfig cfg = load_config(opts);
    const fs::path out_dir = cfg.output_dir;
    ensure_clean_outputs(out_dir, {"snapshots.snap", "provenance.json", "resolved_config.json"},
                         opts.force);

    const nnspod::StructuredGrid grid = cfg.grid.build();
    std::optional<nnspod::SnapshotMatrix> snapshots;
    ordered_json provenance;
    provenance["command"] = "generate";
    provenance["kind"] = cfg.fom.kind;

    if (cfg.fom.kind == "deforming") {
        if (cfg.fom.n_steps < 2)
            throw ConfigError("config: fom.n_steps must be >= 2 for the deforming generator");
        snapshots = nnspod::generate_deforming_pulse(grid, cfg.fom.n_steps);
    } else if (cfg.fom.kind == "csv") {
        if (cfg.fom.csv_path.empty())
            throw ConfigError("config: fom.csv_path required for kind csv");
        try {
            snapshots = nnspod::ingest_csv(cfg.fom.csv_path, grid);
        } catch (const nnspod::FormatError& e) {
            throw ConfigError(e.what());
        }
    } else {
        const nnspod::FomConfig fom = nnspod::build_fom_config(cfg);
        provenance["cfl"] = nnspod::cfl_number(fom);
        snapshots = nnspod::simulate_advection(fom);
    }

    nnspod::save_snapshots(*snapshots, out_dir / "snapshots.snap");
    provenance["n_cells"] = snapshots->n_cells();
    provenance["n_snapshots"] = snapshots->n_snapshots();
    provenance["t_first"] = snapshots->params().front();
    provenance["t_last"] = snapshots->params().back();
    write_text(out_dir / "provenance.json", provenance.dump(2) + "\n");
    write_text(out_dir / "resolved_config.json", nnspod::resolved_config_json(cfg));
    return kExitOk;
}

int cmd_reduce(const CommonOptions& opts, const std::string& method) {
    const nnspod::RunConfig cfg = load_config(opts);
    if (method != "pod" && method != "spod" && method != "nnspod")
        throw ConfigError("--method must be pod, spod or nnspod");
    if (cfg.snapshots.empty())
        throw ConfigError("config: 'snapshots' path is required for reduce");

    const fs::path out_dir = cfg.output_dir;
    std::vector<std::string> outputs = {"sv_" + method + ".csv", "energy_" + method + ".csv",
                                        "report.json", "resolved_config.json"};
    if (method == "nnspod")
        for (const char* f : {"interp.json", "shift.json", "shifted.snap", "sv_before.csv",
                              "sv_after.csv", "loss_interp.csv", "loss_shift.csv"})
            outputs.emplace_back(f);
    ensure_clean_outputs(out_dir, outputs, opts.force);

    nnspod::SnapshotMatrix m = [&] {
        try {
            return nnspod::load_snapshots(cfg.snapshots);
        } catch (const nnspod::FormatError& e) {
            throw ConfigError(e.what());
        }
    }();

    ordered_json report;
    report["method"] = method;
    report["n_cells"] = m.n_cells();
    report["n_snapshots"] = m.n_snapshots();

    std::optional<nnspod::PodResult> reduced;
    if (method == "pod") {
        reduced = nnspod::pod(m);
    } else if (method == "spod") {
        const nnspod::ShiftSpec spec = nnspod::build_shift_spec(cfg);
        reduced = nnspod::pod(nnspod::shift_all(m, spec));
    } else {
        nnspod::NnspodResult result = nnspod::run_nnspod(m, cfg.nnspod);
        nnspod::write_result_bundle(result, cfg.nnspod, out_dir);
        report["chosen_reference"] = result.chosen_reference;
        report["converged"] = result.converged;
        report["residual_at_target"] = result.residual_at_target;
        report["regrid_warning"] = result.regrid_warning;
        reduced = std::move(result.pod_after);
    }

    nnspod::write_singular_values_csv(out_dir / ("sv_" + method + ".csv"),
                                      reduced->singular_values);
    nnspod::write_energy_csv(out_dir / ("energy_" + method + ".csv"), reduced->energy);

    bool unreachable = false;
    ordered_json modes_at, best_achievable;
    for (double eps : cfg.pod.thresholds) {
        const std::string key = nnspod::threshold_key(eps);
        try {
            modes_at[key] = nnspod::modes_for_threshold(*reduced, eps);
        } catch (const nnspod::ThresholdUnreachable& e) {
            modes_at[key] = nullptr;
            best_achievable[key] = e.best_achievable;
            unreachable = true;
        }
    }
    report["modes_at"] = modes_at;
    if (unreachable) report["best_achievable"] = best_achievable;

    write_text(out_dir / "report.json", report.dump(2) + "\n");
    write_text(out_dir / "resolved_config.json", nnspod::resolved_config_json(cfg));

    if (unreachable) {
        std::cerr << "warning: some thresholds are unreachable with the retained modes\n";
        return kExitThreshold;
    }
    return kExitOk;
}

std::vector<double> read_sv_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("compare: cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || line.rfind("mode,", 0) != 0)
        throw ConfigError("compare: '" + path.string() + "' is not a singular-value csv");
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("compare: malformed row in '" + path.string() + "'");
        values.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
    }
    return values;
}

int cmd_compare(const std::string& input_dir, const std::string& output, bool force) {
    const fs::path in_dir = input_dir;
    if (!fs::is_directory(in_dir))
        throw ConfigError("compare: '" + input_dir + "' is not a directory");
    const fs::path out_dir = output.empty() ? in_dir : fs::path(output);

    const std::vector<std::string> methods = {"pod", "spod", "nnspod"};
    std::map<std::string, std::vector<double>> series;
    std::map<std::string, fs::path> report_paths;

    auto scan_dir = [&](const fs::path& dir) {
        for (const auto& method : methods) {
            const fs::path sv = dir / ("sv_" + method + ".csv");
            if (fs::exists(sv) && !series.count(method)) {
                series[method] = read_sv_csv(sv);
                if (fs::exists(dir / "report.json"))
                    report_paths[method] = dir / "report.json";
            }
        }
    };
    scan_dir(in_dir);
    for (const auto& entry : fs::directory_iterator(in_dir))
        if (entry.is_directory()) scan_dir(entry.path());

    if (series.size() < 2)
        throw ConfigError("compare: found " + std::to_string(series.size()) +
                          " report(s) in '" + input_dir + "'; need at least 2");
    const std::size_t n = series.begin()->second.size();
    for (const auto& [method, values] : series)
        if (values.size() != n)
            throw ConfigError("compare: snapshot counts differ between reports (" +
                              std::to_string(values.size()) + " vs " + std::to_string(n) + ")");

    fs::create_directories(out_dir);
    if (!force && fs::exists(out_dir / "comparison.csv"))
        throw ConfigError("output '" + (out_dir / "comparison.csv").string() +
                          "' already exists; rerun with --force to overwrite");

    std::ostringstream csv;
    csv << "mode";
    for (const auto& method : methods)
        if (series.count(method)) csv << ",sigma_" << method;
    csv << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        csv << (i + 1);
        for (const auto& method : methods)
            if (series.count(method)) csv << ',' << nnspod::g17(series[method][i]);
        csv << '\n';
    }
    write_text(out_dir / "comparison.csv", csv.str());

    for (const auto& method : methods) {
        if (!series.count(method)) continue;
        std::cout << method << ": n_modes=" << n;
        if (report_paths.count(method)) {
            std::ifstream is(report_paths[method]);
            ordered_json report;
            try {
                is >> report;
                if (report.contains("modes_at"))
                    for (const auto& item : report.at("modes_at").items())
                        std::cout << " modes_at[" << item.key() << "]=" << item.value().dump();
            } catch (const ordered_json::exception&) {
                std::cout << " (unreadable report.json)";
            }
        }
        std::cout << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Snapshot reduction with POD, shifted POD and automatic shift detection"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::string method = "pod";
    std::string compare_dir;
    std::string compare_output;
    bool compare_force = false;

    auto* generate = app.add_subcommand("generate", "Generate or ingest a snapshot set");
    generate->add_option("--config", opts.config_path, "Run configuration (JSON)")->required();
    generate->add_option("--output", opts.output, "Output directory (overrides config)");
    generate->add_option("--seed", opts.seed, "Seed override");
    generate->add_option("--kind", opts.kind_override,
                         "Dataset kind override (constant|analytic|deforming|csv)");
    generate->add_flag("--force", opts.force, "Overwrite existing outputs");

    auto* reduce = app.add_subcommand("reduce", "Reduce a snapshot set and emit decay reports");
    reduce->add_option("--config", opts.config_path, "Run configuration (JSON)")->required();
    reduce->add_option("--method", method, "pod | spod | nnspod")->required();
    reduce->add_option("--output", opts.output, "Output directory (overrides config)");
    reduce->add_option("--seed", opts.seed, "Seed override");
    reduce->add_flag("--force", opts.force, "Overwrite existing outputs");

    auto* compare = app.add_subcommand("compare", "Merge singular-value reports side by side");
    compare->add_option("dir", compare_dir, "Directory holding at least two report bundles")
        ->required();
    compare->add_option("--output", compare_output, "Directory for comparison.csv");
    compare->add_flag("--force", compare_force, "Overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (generate->parsed()) return cmd_generate(opts);
        if (reduce->parsed()) return cmd_reduce(opts, method);
        return cmd_compare(compare_dir, compare_output, compare_force);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nnspod::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const nnspod::TrainingError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return kExitTraining;
    } catch (const nnspod::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
