// Command-line driver: runs benchmark experiments and writes CSV artifacts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "mfgp/config.hpp"
#include "mfgp/error.hpp"
#include "mfgp/harness.hpp"
#include "mfgp/hodgkin_huxley.hpp"
#include "mfgp/log.hpp"

namespace fs = std::filesystem;
using namespace mfgp;

namespace {

struct GlobalFlags {
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    bool analytic_lowfi = false;
    bool wall_time = false;
    int verbosity = 0;
};

fs::path output_dir(const GlobalFlags& flags)
{
    fs::path dir = flags.out;
    if (dir.empty()) {
        const char* env = std::getenv("MFGP_OUT");
        dir = env && *env ? env : ".";
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    return out;
}

ExperimentConfig load(const std::string& path, const GlobalFlags& flags)
{
    ExperimentConfig config = parse_config(path);
    if (flags.seed)
        config.seed = *flags.seed;
    if (flags.analytic_lowfi)
        config.analytic_lowfi = true;
    if (flags.wall_time)
        config.record_wall_time = true;
    return config;
}

// Runs the experiment, streaming results.csv. Returns the exit status.
int run(const std::string& config_path, const GlobalFlags& flags, bool sweep)
{
    const ExperimentConfig config = load(config_path, flags);
    const fs::path dir = output_dir(flags);

    std::ofstream results = open_output(dir / "results.csv");
    write_results_header(results);
    RunOptions options;
    options.jobs = flags.jobs;
    options.allow_failed_cells = true;
    options.on_trial = [&](const TrialResult& r) {
        write_results_row(results, config.benchmark, r, config.record_wall_time);
        results.flush();
        log_info("trial", r.method + " n_high=" + std::to_string(r.n_high) + " trial=" + std::to_string(r.trial) +
                              (r.ok ? "" : " failed"));
    };
    if (!sweep)
        options.on_prediction = [&](const std::string& method, const Vector& t, const Prediction& p,
                                    const Vector& truth) {
            std::ofstream out = open_output(dir / ("predictions_" + config.benchmark + "_" + method + ".csv"));
            write_predictions_csv(out, t, p, truth);
        };

    ExperimentResult result;
    if (sweep) {
        SweepTable table = sensitivity_sweep(config, options);
        result = std::move(table.result);
    } else {
        result = run_experiment(config, options);
    }

    std::ofstream summary = open_output(dir / "summary.csv");
    write_summary_csv(summary, result);
    print_summary_table(std::cout, result);

    const auto failed = result.failed_cells();
    if (!failed.empty()) {
        std::cerr << "mfgp: error: " << failed.size() << " cell(s) lost more than half their trials (first: "
                  << failed.front()->method << " at n_high " << failed.front()->n_high << ")\n";
        return 1;
    }
    return 0;
}

int simulate_hh(double i_ext, double t_end, double dt, const GlobalFlags& flags)
{
    HHParameters params;
    params.i_ext = i_ext;
    const HHTrajectory trajectory = hh_simulate(params, hh_steady_state(-60.0), t_end, dt);
    const fs::path path = output_dir(flags) / "hh_trajectory.csv";
    std::ofstream out = open_output(path);
    write_trajectory_csv(out, trajectory);
    const Vector v = trajectory.voltage();
    std::cout << "wrote " << path.string() << ": " << trajectory.states.size() << " samples, "
              << count_spikes(v) << " spikes, V in [" << v.minCoeff() << ", " << v.maxCoeff() << "] mV\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multifidelity Gaussian process regression with delay-coordinate embeddings"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--out", flags.out, "Output directory (default: $MFGP_OUT or the working directory)");
    app.add_option("--seed", flags.seed, "Override the config's master seed");
    app.add_option("--jobs", flags.jobs, "Concurrent trials (default: hardware parallelism)")->check(CLI::NonNegativeNumber);
    app.add_flag("--analytic-lowfi", flags.analytic_lowfi, "Evaluate the low-fidelity function exactly");
    app.add_flag("--wall-time", flags.wall_time, "Record measured wall time in results.csv");
    app.add_flag("-v,--verbose", flags.verbosity, "More logging (-v info, -vv debug)");

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* sweep_cmd = app.add_subcommand("sweep", "Sensitivity sweep over n_high for a JSON config");
    sweep_cmd->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

    double i_ext = 1.0;
    double t_end = 100.0;
    double dt = 0.01;
    auto* hh_cmd = app.add_subcommand("simulate-hh", "Integrate the Hodgkin-Huxley model and write the trajectory");
    hh_cmd->add_option("--i-ext", i_ext, "External current");
    hh_cmd->add_option("--t-end", t_end, "End time (ms)")->check(CLI::PositiveNumber);
    hh_cmd->add_option("--dt", dt, "RK4 step (ms)")->check(CLI::PositiveNumber);

    auto* list_cmd = app.add_subcommand("list-benchmarks", "Print the available benchmarks");

    CLI11_PARSE(app, argc, argv);

    set_log_level(flags.verbosity >= 2 ? LogLevel::Debug : flags.verbosity == 1 ? LogLevel::Info : LogLevel::Warning);
    try {
        if (*list_cmd) {
            for (const std::string& name : benchmark_names())
                std::cout << name << '\n';
            return 0;
        }
        if (*hh_cmd)
            return simulate_hh(i_ext, t_end, dt, flags);
        return run(config_path, flags, sweep_cmd->parsed());
    } catch (const ValidationError& e) {
        std::cerr << "mfgp: invalid config: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "mfgp: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mfgp: error: " << e.what() << '\n';
        return 1;
    }
}
