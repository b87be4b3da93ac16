#include "mfgp/benchmarks.hpp"

#include <cmath>
#include <numbers>

#include "mfgp/error.hpp"

namespace mfgp {

namespace {

    constexpr double pi = std::numbers::pi;

    double sin8(double t) { return std::sin(8.0 * pi * t); }

    // Forrester-type curve with a unit-slope ramp; the left branch sits 5 lower.
    double stepped_forrester(double t)
    {
        const double base = 0.5 * (6.0 * t - 2.0) * (6.0 * t - 2.0) * std::sin(12.0 * t - 4.0) + 10.0 * (t - 0.5);
        return t < 0.5 ? base - 5.0 : base;
    }

} // namespace

std::shared_ptr<const LowFidelityEvaluator> BenchmarkPair::analytic_low() const
{
    return std::make_shared<AnalyticEvaluator>(f_low, low_domain);
}

Vector BenchmarkPair::high(const Vector& t) const { return t.unaryExpr(f_high); }

Vector BenchmarkPair::low(const Vector& t) const { return t.unaryExpr(f_low); }

BenchmarkPair hodgkin_huxley_benchmark(const HHWindow& window)
{
    const auto models = std::make_shared<const HHFidelityModels>(hh_fidelity_models(window));
    BenchmarkPair b;
    b.name = "hodgkin_huxley";
    b.f_high = [models](double s) { return models->v_high(s); };
    b.f_low = [models](double s) { return models->v_low(s); };
    b.domain = {0.0, 1.0};
    b.low_domain = window.simulated();
    b.default_n_high = 20;
    b.default_n_low = 300;
    return b;
}

BenchmarkPair benchmark(std::string_view name)
{
    BenchmarkPair b;
    b.name = std::string(name);
    if (name == "simple") {
        b.f_high = [](double t) { return sin8(t) * sin8(t); };
        b.f_low = sin8;
        // Eight humps of f_h: too many for 15 samples in t, none of which matters in f_l.
        b.domain = {0.0, 1.0};
        b.default_n_high = 15;
        b.default_n_low = 100;
    } else if (name == "embed_demo") {
        b.f_high = [](double t) { return t * t + sin8(t) * sin8(t); };
        b.f_low = sin8;
        b.domain = {0.0, 0.25};
        b.default_n_high = 7;
        b.default_n_low = 100;
        b.delay_step = 1.0 / 400.0;
    } else if (name == "phase_shift") {
        b.f_high = [](double t) {
            const double s = std::sin(8.0 * pi * t + pi / 10.0);
            return t * t + s * s;
        };
        b.f_low = sin8;
        b.domain = {0.0, 1.0};
        b.default_n_high = 10;
        b.default_n_low = 100;
    } else if (name == "periodicity") {
        b.f_high = [](double t) { return std::sin(8.0 * pi * t + pi / 10.0); };
        b.f_low = [](double t) { return std::sin(6.0 * std::numbers::sqrt2 * pi * t); };
        b.domain = {0.0, 1.0};
        b.default_n_high = 15;
        b.default_n_low = 200;
        // Three grid spacings: the delays then span a useful fraction of the f_l period.
        b.delay_step = 0.015;
    } else if (name == "discontinuity") {
        b.f_high = [](double t) { return 2.0 * stepped_forrester(t) - 20.0 * t + 20.0; };
        b.f_low = stepped_forrester;
        b.domain = {0.0, 1.0};
        b.default_n_high = 10;
        b.default_n_low = 200;
    } else if (name == "hodgkin_huxley") {
        return hodgkin_huxley_benchmark(HHWindow{});
    } else {
        throw InvalidArgument("unknown benchmark '" + std::string(name) + "'");
    }
    return b;
}

std::vector<std::string> benchmark_names()
{
    return {"simple", "embed_demo", "phase_shift", "periodicity", "discontinuity", "hodgkin_huxley"};
}

} // namespace mfgp
