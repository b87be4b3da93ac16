#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfgp/benchmarks.hpp"
#include "mfgp/fusion.hpp"
#include "mfgp/types.hpp"

namespace mfgp {

/// log10 of the relative L2 error, clamped below at -16.
double log_l2_error(const Vector& prediction, const Vector& truth);

/// `n_high` uniform draws from the domain, sorted ascending. Deterministic per seed.
Vector sample_high_fidelity(const Interval& domain, int n_high, std::uint64_t seed);

/// `n` equispaced points including both endpoints.
Vector uniform_grid(const Interval& domain, int n);

struct ExperimentConfig {
    std::string benchmark;
    std::vector<MethodSpec> methods;
    std::vector<int> n_high;
    int n_low = 100;
    int n_trials = 10;
    int n_test = 500;
    std::uint64_t seed = 0;
    /// Evaluate f_l exactly instead of through a GP trained on the low-fidelity grid.
    bool analytic_lowfi = false;
    /// Overrides the benchmark's delay step for methods that do not set their own.
    std::optional<double> delay_step;
    int restarts = 5;
    int ar1_restarts = 2;
    /// Pins the noise variance of the high-fidelity fits; nullopt optimizes it.
    std::optional<double> noise_variance;
    /// Pins the noise variance of the low-fidelity surrogate. The grid samples are exact and dense,
    /// and a fitted noise level smooths over sharp features of f_l; nullopt optimizes it.
    std::optional<double> lowfi_noise_variance = 0.0;
    HHWindow hh_window;
    /// Writes measured wall time to results.csv; off by default so output is reproducible.
    bool record_wall_time = false;

    void validate() const;
};

struct TrialResult {
    std::string method;
    int n_high = 0;
    int trial = 0;
    double log_l2_error = 0.0;
    bool ok = true;
    std::string error;
    double wall_time_ms = 0.0;
};

struct CellSummary {
    std::string method;
    int n_high = 0;
    /// Mean over successful trials; NaN when none succeeded.
    double mean_log_l2 = 0.0;
    int n_ok = 0;
    int n_failed = 0;
};

struct ExperimentResult {
    std::string benchmark;
    std::vector<TrialResult> trials;   // method, then n_high, then trial
    std::vector<CellSummary> summary;  // method, then n_high

    const CellSummary& cell(const std::string& method, int n_high) const;
    /// Cells where more than half the trials failed.
    std::vector<const CellSummary*> failed_cells() const;
};

struct RunOptions {
    /// Concurrent trials; 0 means the available hardware parallelism.
    int jobs = 1;
    /// Called once per trial in canonical order, as soon as all earlier trials are done.
    std::function<void(const TrialResult&)> on_trial;
    /// Called with the predictions of trial 0 at the first n_high for every method.
    std::function<void(const std::string& method, const Vector& t, const Prediction&, const Vector& truth)>
        on_prediction;
    /// Return normally even when a cell lost more than half its trials.
    bool allow_failed_cells = false;
};

/// Resolves the pair for one trial: the fixed low-fidelity grid and a fresh high-fidelity subset
/// shared by every method at this (n_high, trial).
FidelityPair experiment_pair(const BenchmarkPair& bench, const ExperimentConfig& config, int n_high, int trial);

/// Runs every (method, n_high, trial) cell. Throws ExperimentError when a cell lost more than
/// half of its trials unless `allow_failed_cells` is set.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Mean log error per method (rows) and n_high (columns).
struct SweepTable {
    std::vector<std::string> methods;
    std::vector<int> n_high;
    Matrix mean_log_l2;
    ExperimentResult result;
};

SweepTable sensitivity_sweep(const ExperimentConfig& config, const RunOptions& options = {});

void write_results_header(std::ostream& out);
void write_results_row(std::ostream& out, const std::string& benchmark, const TrialResult& r, bool wall_time);
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
void write_predictions_csv(std::ostream& out, const Vector& t, const Prediction& p, const Vector& truth);
/// Fixed-width table for terminals.
void print_summary_table(std::ostream& out, const ExperimentResult& result);

} // namespace mfgp
