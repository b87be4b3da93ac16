#include "mfgp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "csv_detail.hpp"
#include "mfgp/error.hpp"
#include "mfgp/log.hpp"

namespace mfgp {

namespace {

    constexpr std::uint64_t kSubsetSalt = 0x5355425345;
    constexpr std::uint64_t kModelSalt = 0x4d4f44454c;
    constexpr std::uint64_t kLowFiSalt = 0x4c4f5746;

    // FNV-1a; stable across platforms, unlike std::hash.
    std::uint64_t hash_id(const std::string& s)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t trial_seed(std::uint64_t master, std::uint64_t salt, int n_high, int trial)
    {
        return mix_seed(mix_seed(mix_seed(master, salt), static_cast<std::uint64_t>(n_high)),
                        static_cast<std::uint64_t>(trial));
    }

    BenchmarkPair resolve_benchmark(const ExperimentConfig& config)
    {
        if (config.benchmark == "hodgkin_huxley")
            return hodgkin_huxley_benchmark(config.hh_window);
        return benchmark(config.benchmark);
    }

    MethodSpec resolve_delay(MethodSpec spec, const BenchmarkPair& bench, const ExperimentConfig& config)
    {
        if (spec.embedding.num_delays > 0 && !(spec.embedding.delay_step > 0.0)) {
            if (config.delay_step)
                spec.embedding.delay_step = *config.delay_step;
            else if (bench.delay_step)
                spec.embedding.delay_step = *bench.delay_step;
        }
        return spec;
    }

    struct WorkItem {
        std::size_t method;
        int n_high;
        int trial;
    };

} // namespace

double log_l2_error(const Vector& prediction, const Vector& truth)
{
    if (prediction.size() != truth.size())
        throw InvalidArgument("log_l2_error: prediction has " + std::to_string(prediction.size()) +
                              " entries, truth has " + std::to_string(truth.size()));
    if (truth.size() == 0)
        throw InvalidArgument("log_l2_error: empty input");
    const double denom = truth.norm();
    if (!(denom > 0.0))
        throw InvalidArgument("log_l2_error: truth has zero norm");
    const double rel = (prediction - truth).norm() / denom;
    if (std::isnan(rel))
        return std::numeric_limits<double>::quiet_NaN();
    return std::max(-16.0, std::log10(rel));
}

Vector sample_high_fidelity(const Interval& domain, int n_high, std::uint64_t seed)
{
    if (n_high < 1)
        throw InvalidArgument("sample_high_fidelity: n_high must be >= 1");
    if (!domain.bounded() || !(domain.lower <= domain.upper))
        throw InvalidArgument("sample_high_fidelity: domain must be bounded");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(domain.lower, domain.upper);
    Vector t(n_high);
    for (Index i = 0; i < n_high; ++i)
        t(i) = u(rng);
    std::sort(t.data(), t.data() + t.size());
    return t;
}

Vector uniform_grid(const Interval& domain, int n)
{
    if (n < 1)
        throw InvalidArgument("uniform_grid: need at least one point");
    if (n == 1)
        return Vector::Constant(1, domain.lower);
    return Vector::LinSpaced(n, domain.lower, domain.upper);
}

void ExperimentConfig::validate() const
{
    if (benchmark.empty())
        throw ValidationError("benchmark", "must be set");
    const auto names = benchmark_names();
    if (std::find(names.begin(), names.end(), benchmark) == names.end())
        throw ValidationError("benchmark", "unknown benchmark '" + benchmark + "'");
    if (methods.empty())
        throw ValidationError("methods", "must list at least one method");
    for (const MethodSpec& m : methods) {
        try {
            EmbeddingConfig e = m.embedding;
            if (e.num_delays > 0 && !(e.delay_step > 0.0))
                e.delay_step = 1.0;  // filled in per pair
            e.validate();
        } catch (const InvalidArgument& err) {
            throw ValidationError("methods", m.id + ": " + err.what());
        }
    }
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
            if (methods[i].id == methods[j].id)
                throw ValidationError("methods", "duplicate method id '" + methods[i].id + "'");
    if (n_high.empty())
        throw ValidationError("n_high", "must list at least one count");
    for (int n : n_high)
        if (n < 1)
            throw ValidationError("n_high", "counts must be >= 1");
    if (n_low < 2)
        throw ValidationError("n_low", "must be >= 2");
    if (n_trials < 1)
        throw ValidationError("n_trials", "must be >= 1");
    if (n_test < 2)
        throw ValidationError("n_test", "must be >= 2");
    if (delay_step && !(*delay_step > 0.0 && std::isfinite(*delay_step)))
        throw ValidationError("delay_step", "must be finite and > 0");
    if (restarts < 1)
        throw ValidationError("restarts", "must be >= 1");
    if (ar1_restarts < 1)
        throw ValidationError("ar1_restarts", "must be >= 1");
    if (noise_variance && !(*noise_variance >= 0.0 && std::isfinite(*noise_variance)))
        throw ValidationError("noise_variance", "must be finite and >= 0, or null");
    if (lowfi_noise_variance && !(*lowfi_noise_variance >= 0.0 && std::isfinite(*lowfi_noise_variance)))
        throw ValidationError("lowfi_noise_variance", "must be finite and >= 0, or null");
    if (!(hh_window.start > 0.0 && hh_window.length > 0.0 && hh_window.dt > 0.0))
        throw ValidationError("hh_window", "start, length and dt must be > 0");
}

const CellSummary& ExperimentResult::cell(const std::string& method, int n_high) const
{
    for (const CellSummary& c : summary)
        if (c.method == method && c.n_high == n_high)
            return c;
    throw InvalidArgument("no cell for method '" + method + "' at n_high " + std::to_string(n_high));
}

std::vector<const CellSummary*> ExperimentResult::failed_cells() const
{
    std::vector<const CellSummary*> out;
    for (const CellSummary& c : summary)
        if (2 * c.n_failed > c.n_ok + c.n_failed)
            out.push_back(&c);
    return out;
}

FidelityPair experiment_pair(const BenchmarkPair& bench, const ExperimentConfig& config, int n_high, int trial)
{
    FidelityPair pair;
    pair.domain = bench.domain;
    pair.t_low = uniform_grid(bench.domain, config.n_low);
    pair.y_low = bench.low(pair.t_low);
    pair.t_high = sample_high_fidelity(bench.domain, n_high, trial_seed(config.seed, kSubsetSalt, n_high, trial));
    pair.y_high = bench.high(pair.t_high);
    return pair;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    const BenchmarkPair bench = resolve_benchmark(config);

    FusionOptions fusion;
    fusion.fit.restarts = config.restarts;
    fusion.ar1_restarts = config.ar1_restarts;
    fusion.fit.fixed_noise = config.noise_variance;

    std::vector<MethodSpec> methods;
    for (const MethodSpec& m : config.methods)
        methods.push_back(resolve_delay(m, bench, config));

    // One low-fidelity model per experiment: the grid does not change between trials.
    std::shared_ptr<const LowFidelityEvaluator> low;
    FidelityPair grid_pair;
    grid_pair.domain = bench.domain;
    grid_pair.t_low = uniform_grid(bench.domain, config.n_low);
    grid_pair.y_low = bench.low(grid_pair.t_low);
    if (config.analytic_lowfi)
        low = bench.analytic_low();
    else {
        FitOptions low_fit = fusion.fit;
        low_fit.fixed_noise = config.lowfi_noise_variance;
        low = low_fidelity_surrogate(grid_pair, mix_seed(config.seed, kLowFiSalt), low_fit);
    }

    const Vector t_test = uniform_grid(bench.domain, config.n_test);
    const Vector truth = bench.high(t_test);

    std::vector<WorkItem> work;
    for (std::size_t m = 0; m < methods.size(); ++m)
        for (int n : config.n_high)
            for (int k = 0; k < config.n_trials; ++k)
                work.push_back({m, n, k});

    std::vector<TrialResult> results(work.size());
    std::vector<char> done(work.size(), 0);
    std::size_t emitted = 0;
    std::mutex mutex;
    std::atomic<std::size_t> next{0};

    auto run_one = [&](std::size_t i) {
        const WorkItem& w = work[i];
        const MethodSpec& spec = methods[w.method];
        TrialResult r;
        r.method = spec.id;
        r.n_high = w.n_high;
        r.trial = w.trial;
        const auto start = std::chrono::steady_clock::now();
        try {
            const FidelityPair pair = experiment_pair(bench, config, w.n_high, w.trial);
            const std::uint64_t seed = trial_seed(config.seed, mix_seed(kModelSalt, hash_id(spec.id)), w.n_high, w.trial);
            const FusionModel model = build_model(pair, spec, seed, fusion, low);
            const Prediction p = model.predict(t_test);
            r.log_l2_error = log_l2_error(p.mean, truth);
            if (!std::isfinite(r.log_l2_error))
                throw NumericalError("non-finite prediction");
            if (options.on_prediction && w.trial == 0 && w.n_high == config.n_high.front())
                options.on_prediction(spec.id, t_test, p, truth);
        } catch (const NumericalError& e) {
            r.ok = false;
            r.error = e.what();
        } catch (const DomainError& e) {
            r.ok = false;
            r.error = e.what();
        }
        r.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (!r.ok)
            log_warning("trial_failed", spec.id + " n_high=" + std::to_string(w.n_high) +
                                            " trial=" + std::to_string(w.trial) + ": " + r.error);

        std::lock_guard<std::mutex> lock(mutex);
        results[i] = std::move(r);
        done[i] = 1;
        while (emitted < work.size() && done[emitted]) {
            if (options.on_trial)
                options.on_trial(results[emitted]);
            ++emitted;
        }
    };

    unsigned jobs = options.jobs > 0 ? static_cast<unsigned>(options.jobs)
                                     : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, work.size())));
    std::exception_ptr first_error;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
            try {
                run_one(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (!first_error)
                    first_error = std::current_exception();
                next = work.size();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (std::thread& t : pool)
            t.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);

    ExperimentResult out;
    out.benchmark = config.benchmark;
    out.trials = std::move(results);
    for (const MethodSpec& spec : methods)
        for (int n : config.n_high) {
            CellSummary c;
            c.method = spec.id;
            c.n_high = n;
            double sum = 0.0;
            for (const TrialResult& r : out.trials)
                if (r.method == spec.id && r.n_high == n) {
                    if (r.ok) {
                        sum += r.log_l2_error;
                        ++c.n_ok;
                    } else {
                        ++c.n_failed;
                    }
                }
            c.mean_log_l2 = c.n_ok > 0 ? sum / c.n_ok : std::numeric_limits<double>::quiet_NaN();
            out.summary.push_back(c);
        }

    const auto failed = out.failed_cells();
    if (!failed.empty() && !options.allow_failed_cells)
        throw ExperimentError(std::to_string(failed.size()) + " cell(s) lost more than half their trials, first: " +
                              failed.front()->method + " at n_high " + std::to_string(failed.front()->n_high));
    return out;
}

SweepTable sensitivity_sweep(const ExperimentConfig& config, const RunOptions& options)
{
    if (config.n_high.size() < 2)
        throw ValidationError("n_high", "a sweep needs at least two counts");
    SweepTable table;
    table.result = run_experiment(config, options);
    table.n_high = config.n_high;
    for (const MethodSpec& m : config.methods)
        table.methods.push_back(m.id);
    table.mean_log_l2.resize(static_cast<Index>(table.methods.size()), static_cast<Index>(table.n_high.size()));
    for (std::size_t i = 0; i < table.methods.size(); ++i)
        for (std::size_t j = 0; j < table.n_high.size(); ++j)
            table.mean_log_l2(static_cast<Index>(i), static_cast<Index>(j)) =
                table.result.cell(table.methods[i], table.n_high[j]).mean_log_l2;
    return table;
}

void write_results_header(std::ostream& out)
{
    out << "benchmark,method,n_high,trial,log_l2_error,status,wall_time_ms\n";
}

void write_results_row(std::ostream& out, const std::string& benchmark, const TrialResult& r, bool wall_time)
{
    detail::write_csv_row(out, {benchmark, r.method, std::to_string(r.n_high), std::to_string(r.trial),
                                r.ok ? detail::format_number(r.log_l2_error) : "NA", r.ok ? "ok" : "failed",
                                wall_time ? detail::format_number(r.wall_time_ms) : "NA"});
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result)
{
    out << "benchmark,method,n_high,mean_log_l2,n_failed\n";
    for (const CellSummary& c : result.summary)
        detail::write_csv_row(out, {result.benchmark, c.method, std::to_string(c.n_high),
                                    c.n_ok > 0 ? detail::format_number(c.mean_log_l2) : "NA",
                                    std::to_string(c.n_failed)});
}

void write_predictions_csv(std::ostream& out, const Vector& t, const Prediction& p, const Vector& truth)
{
    out << "t,mean,variance,truth\n";
    for (Index i = 0; i < t.size(); ++i)
        out << detail::format_number(t(i)) << ',' << detail::format_number(p.mean(i)) << ','
            << detail::format_number(p.variance(i)) << ',' << detail::format_number(truth(i)) << '\n';
}

void print_summary_table(std::ostream& out, const ExperimentResult& result)
{
    std::vector<int> counts;
    std::vector<std::string> methods;
    for (const CellSummary& c : result.summary) {
        if (std::find(counts.begin(), counts.end(), c.n_high) == counts.end())
            counts.push_back(c.n_high);
        if (std::find(methods.begin(), methods.end(), c.method) == methods.end())
            methods.push_back(c.method);
    }
    out << "benchmark: " << result.benchmark << "  (mean log10 relative L2 error; failed trials in brackets)\n";
    out << std::left << std::setw(12) << "method";
    for (int n : counts)
        out << std::right << std::setw(14) << ("n_high=" + std::to_string(n));
    out << '\n';
    for (const std::string& m : methods) {
        out << std::left << std::setw(12) << m;
        for (int n : counts) {
            const CellSummary& c = result.cell(m, n);
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << c.mean_log_l2;
            if (c.n_failed > 0)
                cell << " [" << c.n_failed << "]";
            out << std::right << std::setw(14) << cell.str();
        }
        out << '\n';
    }
}

} // namespace mfgp
