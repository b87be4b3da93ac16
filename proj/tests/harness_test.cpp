#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "mfgp/config.hpp"
#include "mfgp/error.hpp"
#include "mfgp/harness.hpp"
#include "mfgp/log.hpp"

using namespace mfgp;

namespace {

ExperimentConfig small_config()
{
    ExperimentConfig c = default_config("phase_shift");
    c.methods = {MethodSpec::named("kriging"), MethodSpec::named("nargp")};
    c.n_high = {6, 9};
    c.n_trials = 3;
    c.n_test = 200;
    c.restarts = 1;
    c.seed = 5;
    return c;
}

std::string results_csv(const ExperimentResult& r)
{
    std::ostringstream out;
    write_results_header(out);
    for (const TrialResult& t : r.trials)
        write_results_row(out, r.benchmark, t, false);
    return out.str();
}

// Kolmogorov-Smirnov distance of a sample against U(0, 1).
double ks_uniform(std::vector<double> x)
{
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
    return d;
}

} // namespace

TEST(LogL2, Examples)
{
    const Vector truth = Vector::Constant(4, 2.0);
    EXPECT_EQ(log_l2_error(truth, truth), -16.0);
    EXPECT_NEAR(log_l2_error(Vector(truth * 1.1), truth), -1.0, 1e-12);
    EXPECT_NEAR(log_l2_error(Vector::Zero(4), truth), 0.0, 1e-15);
}

TEST(LogL2Property, ScaleInvariant)
{
    Vector truth(5), pred(5);
    truth << 1.0, -2.0, 0.5, 3.0, 0.1;
    pred << 1.1, -1.9, 0.4, 3.3, 0.0;
    for (double c : {1e-6, 0.3, 7.0, 1e8})
        EXPECT_NEAR(log_l2_error(Vector(c * pred), Vector(c * truth)), log_l2_error(pred, truth), 1e-12);
}

TEST(LogL2, Errors)
{
    EXPECT_THROW(log_l2_error(Vector::Zero(3), Vector::Ones(4)), InvalidArgument);
    EXPECT_THROW(log_l2_error(Vector(), Vector()), InvalidArgument);
    EXPECT_THROW(log_l2_error(Vector::Ones(3), Vector::Zero(3)), InvalidArgument);
}

TEST(Sampling, DeterministicSortedInDomain)
{
    const Interval domain{0.0, 0.25};
    const Vector a = sample_high_fidelity(domain, 15, 99);
    EXPECT_EQ(a, sample_high_fidelity(domain, 15, 99));
    EXPECT_NE(a, sample_high_fidelity(domain, 15, 100));
    EXPECT_TRUE(std::is_sorted(a.data(), a.data() + a.size()));
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_LE(a.maxCoeff(), 0.25);
    EXPECT_THROW(sample_high_fidelity(domain, 0, 1), InvalidArgument);
}

TEST(SamplingProperty, PooledDrawsAreUniform)
{
    std::vector<double> pooled;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const Vector t = sample_high_fidelity({0.0, 1.0}, 10, seed);
        pooled.insert(pooled.end(), t.data(), t.data() + t.size());
    }
    EXPECT_LT(ks_uniform(pooled), 0.02);
}

TEST(Grid, EndpointsIncluded)
{
    const Vector g = uniform_grid({0.0, 1.0}, 5);
    ASSERT_EQ(g.size(), 5);
    EXPECT_EQ(g(0), 0.0);
    EXPECT_EQ(g(4), 1.0);
    EXPECT_DOUBLE_EQ(g(1), 0.25);
}

TEST(Experiment, PairsShareHighFidelityPoints)
{
    const ExperimentConfig c = small_config();
    const BenchmarkPair b = benchmark(c.benchmark);
    const FidelityPair a = experiment_pair(b, c, 9, 1);
    EXPECT_EQ(a.t_high, experiment_pair(b, c, 9, 1).t_high);
    EXPECT_NE(a.t_high, experiment_pair(b, c, 9, 2).t_high);
    EXPECT_EQ(a.t_low.size(), c.n_low);
    EXPECT_EQ(a.y_high, b.high(a.t_high));
}

TEST(Experiment, RunsEveryCellAndAggregates)
{
    const ExperimentConfig c = small_config();
    std::vector<std::string> seen;
    RunOptions opts;
    opts.on_trial = [&](const TrialResult& r) { seen.push_back(r.method); };
    const ExperimentResult r = run_experiment(c, opts);
    ASSERT_EQ(r.trials.size(), 2u * 2u * 3u);
    EXPECT_EQ(seen.size(), r.trials.size());
    EXPECT_EQ(r.trials.front().method, "kriging");
    EXPECT_EQ(r.trials.back().method, "nargp");
    ASSERT_EQ(r.summary.size(), 4u);
    for (const CellSummary& cell : r.summary) {
        double sum = 0.0;
        int n = 0;
        for (const TrialResult& t : r.trials)
            if (t.method == cell.method && t.n_high == cell.n_high && t.ok) {
                sum += t.log_l2_error;
                ++n;
            }
        EXPECT_EQ(cell.n_ok, n);
        EXPECT_DOUBLE_EQ(cell.mean_log_l2, sum / n);
    }
    EXPECT_THROW(r.cell("ar1", 6), InvalidArgument);
}

TEST(ExperimentProperty, BitIdenticalAcrossRunsAndThreads)
{
    const ExperimentConfig c = small_config();
    const std::string serial = results_csv(run_experiment(c));
    RunOptions parallel;
    parallel.jobs = 4;
    EXPECT_EQ(serial, results_csv(run_experiment(c)));
    EXPECT_EQ(serial, results_csv(run_experiment(c, parallel)));
    EXPECT_EQ(serial.rfind("benchmark,method,n_high,trial,log_l2_error,status,wall_time_ms\n", 0), 0u);
}

TEST(Experiment, FullPrecisionRows)
{
    TrialResult r;
    r.method = "gpe";
    r.n_high = 10;
    r.trial = 2;
    r.log_l2_error = -1.0 / 3.0;
    std::ostringstream out;
    write_results_row(out, "periodicity", r, false);
    EXPECT_EQ(out.str(), "periodicity,gpe,10,2,-0.33333333333333331,ok,NA\n");
    EXPECT_EQ(std::stod("-0.33333333333333331"), -1.0 / 3.0);
}

TEST(Experiment, MostlyFailedCellRaises)
{
    // Delays reach far before the simulated lead-in, so every embedding is out of domain.
    ExperimentConfig c = default_config("hodgkin_huxley");
    c.analytic_lowfi = true;
    c.methods = {MethodSpec::gpe("far", {2, 1.0, true, true})};
    c.n_high = {5};
    c.n_trials = 2;
    c.n_test = 50;
    const LogSink previous = set_log_sink([](const LogRecord&) {});
    EXPECT_THROW(run_experiment(c), ExperimentError);
    RunOptions opts;
    opts.allow_failed_cells = true;
    const ExperimentResult r = run_experiment(c, opts);
    set_log_sink(previous);
    ASSERT_EQ(r.failed_cells().size(), 1u);
    EXPECT_EQ(r.summary.front().n_failed, 2);
    EXPECT_TRUE(std::isnan(r.summary.front().mean_log_l2));
    EXPECT_FALSE(r.trials.front().ok);
}

TEST(Sweep, TableMatchesCells)
{
    const ExperimentConfig c = small_config();
    const SweepTable t = sensitivity_sweep(c);
    ASSERT_EQ(t.mean_log_l2.rows(), 2);
    ASSERT_EQ(t.mean_log_l2.cols(), 2);
    EXPECT_EQ(t.mean_log_l2(1, 0), t.result.cell("nargp", 6).mean_log_l2);
    ExperimentConfig one = c;
    one.n_high = {6};
    EXPECT_THROW(sensitivity_sweep(one), ValidationError);
}

TEST(Summary, CsvHasNaForEmptyCells)
{
    ExperimentResult r;
    r.benchmark = "simple";
    r.summary.push_back({"kriging", 15, std::nan(""), 0, 10});
    std::ostringstream out;
    write_summary_csv(out, r);
    EXPECT_EQ(out.str(), "benchmark,method,n_high,mean_log_l2,n_failed\nsimple,kriging,15,NA,10\n");
}
