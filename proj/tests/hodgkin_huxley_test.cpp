#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mfgp/error.hpp"
#include "mfgp/hodgkin_huxley.hpp"

using namespace mfgp;

namespace {

std::vector<double> voltage_grid()
{
    std::vector<double> v;
    for (int i = 0; i <= 3200; ++i)
        v.push_back(-100.0 + 0.05 * i);
    return v;
}

double gate_distance(const HHState& a, const HHState& b)
{
    return std::max({std::abs(a.n - b.n), std::abs(a.m - b.m), std::abs(a.h - b.h)});
}

double state_distance(const HHState& a, const HHState& b)
{
    return std::max(std::abs(a.v - b.v), gate_distance(a, b));
}

// Times of upward crossings of -30 mV, linearly interpolated.
std::vector<double> spike_times(const HHTrajectory& tr)
{
    std::vector<double> out;
    const Vector v = tr.voltage();
    for (Index i = 1; i < v.size(); ++i)
        if (v(i - 1) < -30.0 && v(i) >= -30.0)
            out.push_back(tr.t(i - 1) + (tr.t(i) - tr.t(i - 1)) * (-30.0 - v(i - 1)) / (v(i) - v(i - 1)));
    return out;
}

} // namespace

TEST(HHRates, NonNegativeAndFinite)
{
    for (double v : voltage_grid()) {
        const HHRates r = hh_rates(v);
        for (double x : {r.alpha_n, r.beta_n, r.alpha_m, r.beta_m, r.alpha_h, r.beta_h}) {
            EXPECT_TRUE(std::isfinite(x)) << v;
            EXPECT_GE(x, 0.0) << v;
        }
    }
}

TEST(HHRates, RemovableSingularities)
{
    // alpha_n's denominator vanishes at -50 mV, alpha_m's at -35 mV.
    EXPECT_NEAR(hh_rates(-50.0).alpha_n, 0.1, 1e-15);
    EXPECT_NEAR(hh_rates(-35.0).alpha_m, 1.0, 1e-15);
    // Near the limit x / (1 - exp(-x)) = 1 + x/2 + O(x^2), with x = (v - v0) / 10.
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        EXPECT_NEAR(hh_rates(-50.0 + eps).alpha_n, 0.1 * (1.0 + eps / 20.0), 1e-3 * eps * eps + 1e-15);
        EXPECT_NEAR(hh_rates(-35.0 - eps).alpha_m, 1.0 - eps / 20.0, 1e-2 * eps * eps + 1e-15);
    }
}

TEST(HHRates, ClassicalValuesAtRest)
{
    // Textbook values with rest at -60 mV: alpha_n = 0.01 * 10 / (e - 1).
    const HHRates r = hh_rates(-60.0);
    EXPECT_NEAR(r.alpha_n, 0.1 / (std::exp(1.0) - 1.0), 1e-12);
    EXPECT_NEAR(r.beta_n, 0.125, 1e-15);
    EXPECT_NEAR(r.alpha_m, 2.5 / (std::exp(2.5) - 1.0), 1e-12);
    EXPECT_NEAR(r.beta_m, 4.0, 1e-15);
    EXPECT_NEAR(r.alpha_h, 0.07, 1e-15);
    EXPECT_NEAR(r.beta_h, 1.0 / (1.0 + std::exp(3.0)), 1e-15);
}

TEST(HHRates, FixedPointsInUnitInterval)
{
    for (double v : voltage_grid()) {
        const HHState s = hh_steady_state(v);
        for (double g : {s.n, s.m, s.h}) {
            EXPECT_GE(g, 0.0);
            EXPECT_LE(g, 1.0);
        }
    }
}

TEST(HHSimulate, ClampedVoltageGatesRelax)
{
    // A huge capacitance freezes V; each gate then obeys a linear scalar ODE.
    for (double v : {-80.0, -60.0, -40.0, 0.0}) {
        HHParameters p;
        p.c_m = 1e30;
        const HHRates r = hh_rates(v);
        const double tau_max =
            std::max({1.0 / (r.alpha_n + r.beta_n), 1.0 / (r.alpha_m + r.beta_m), 1.0 / (r.alpha_h + r.beta_h)});
        const HHState fixed = hh_steady_state(v);
        HHState start = fixed;
        start.n = std::clamp(fixed.n + 0.02, 0.0, 1.0);
        start.m = std::clamp(fixed.m - 0.02, 0.0, 1.0);
        start.h = std::clamp(fixed.h + 0.02, 0.0, 1.0);
        const HHTrajectory tr = hh_simulate(p, start, 10.0 * tau_max, 0.01);
        EXPECT_NEAR(tr.states.back().v, v, 1e-12);
        EXPECT_LE(gate_distance(tr.states.back(), fixed), 1e-6) << v;
    }
}

TEST(HHSimulateProperty, RK4SelfConvergenceOrder)
{
    // Smooth segment before the first spike.
    HHParameters p;
    const HHState rest = hh_steady_state(-60.0);
    const double t_end = 2.0;
    const HHState a = hh_simulate(p, rest, t_end, 0.04).states.back();
    const HHState b = hh_simulate(p, rest, t_end, 0.02).states.back();
    const HHState c = hh_simulate(p, rest, t_end, 0.01).states.back();
    const double order = std::log2(state_distance(a, b) / state_distance(b, c));
    EXPECT_GE(order, 3.5);
}

TEST(HHSimulateProperty, GatesStayBoxed)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> volts(-90.0, 40.0);
    for (int trial = 0; trial < 40; ++trial) {
        HHParameters p;
        p.i_ext = trial % 2 ? 1.0 : 1.05;
        const HHState init{volts(rng), u(rng), u(rng), u(rng)};
        const HHTrajectory tr = hh_simulate(p, init, 30.0, 0.01);
        EXPECT_LE(tr.max_gate_excursion, 1e-9);
        for (const HHState& s : tr.states) {
            ASSERT_GE(std::min({s.n, s.m, s.h}), 0.0);
            ASSERT_LE(std::max({s.n, s.m, s.h}), 1.0);
        }
    }
}

TEST(HHSimulate, OscillatesWithinPhysiologicalRange)
{
    HHParameters p;
    const HHTrajectory tr = hh_simulate(p, hh_steady_state(-60.0), 100.0, 0.01);
    const Vector v = tr.voltage();
    EXPECT_GE(v.minCoeff(), -120.0);
    EXPECT_LE(v.maxCoeff(), 80.0);
    EXPECT_GE(count_spikes(v), 3);
}

TEST(HHSimulate, CurrentsDivergeInPhase)
{
    HHParameters hi;
    HHParameters lo;
    lo.i_ext = 1.05;
    const HHState rest = hh_steady_state(-60.0);
    const HHTrajectory a = hh_simulate(hi, rest, 60.0, 0.01);
    const HHTrajectory b = hh_simulate(lo, rest, 60.0, 0.01);
    EXPECT_GT((a.voltage() - b.voltage()).cwiseAbs().maxCoeff(), 1.0);

    const std::vector<double> sa = spike_times(a);
    const std::vector<double> sb = spike_times(b);
    ASSERT_GE(std::min(sa.size(), sb.size()), 4u);
    const double first = std::abs(sa[1] - sb[1]);
    const double later = std::abs(sa[std::min(sa.size(), sb.size()) - 1] - sb[std::min(sa.size(), sb.size()) - 1]);
    EXPECT_GT(later, first);
}

TEST(HHSimulate, Errors)
{
    HHParameters p;
    EXPECT_THROW(hh_simulate(p, hh_steady_state(-60.0), 10.0, 0.0), InvalidArgument);
    EXPECT_THROW(hh_simulate(p, hh_steady_state(-60.0), -1.0, 0.01), InvalidArgument);
    EXPECT_THROW(hh_simulate(p, HHState{-60.0, 1.5, 0.0, 0.0}, 10.0, 0.01), InvalidArgument);
    p.c_m = 0.0;
    EXPECT_THROW(hh_simulate(p, hh_steady_state(-60.0), 10.0, 0.01), InvalidArgument);
}

TEST(HHSimulate, BlowUpReportsStep)
{
    HHParameters p;
    p.c_m = 1e-6;  // stiff beyond what a 0.5 ms RK4 step can hold
    try {
        hh_simulate(p, hh_steady_state(-60.0), 100.0, 0.5);
        FAIL() << "expected an integration error";
    } catch (const IntegrationError& e) {
        EXPECT_GE(e.step(), 1);
    }
}

TEST(HHFidelityPair, EmptyPair)
{
    const FidelityPair p = hh_fidelity_pair(Vector(), Vector());
    EXPECT_EQ(p.t_high.size(), 0);
    EXPECT_EQ(p.y_low.size(), 0);
    EXPECT_NO_THROW(p.validate());
}

TEST(HHFidelityPair, SamplesMatchTrajectory)
{
    const HHWindow window;
    const HHFidelityModels models = hh_fidelity_models(window);
    // Normalized times that land on integration nodes reproduce the stored states.
    Vector t(5);
    t << 0.0, 0.125, 0.5, 0.7525, 1.0;
    const FidelityPair pair = hh_fidelity_pair(t, t, window);
    for (Index i = 0; i < t.size(); ++i) {
        const auto node = static_cast<std::size_t>(std::lround(window.to_ms(t(i)) / window.dt));
        EXPECT_NEAR(pair.y_high(i), models.high_trace.states[node].v, 1e-6);
        EXPECT_NEAR(pair.y_low(i), models.low_trace.states[node].v, 1e-6);
    }
    // Between nodes the interpolant agrees with a finer integration.
    HHParameters fine_params;
    const HHTrajectory fine = hh_simulate(fine_params, hh_steady_state(-60.0), 60.0, 0.0025);
    const Vector between = Vector::LinSpaced(50, 0.003, 0.997);
    for (Index i = 0; i < between.size(); ++i) {
        const double ms = window.to_ms(between(i));
        EXPECT_NEAR(models.v_high(between(i)), fine.voltage_at(ms, fine_params), 5e-2) << ms;
    }
}

TEST(HHFidelityPair, TracesDiffer)
{
    const Vector t = Vector::LinSpaced(400, 0.0, 1.0);
    const FidelityPair pair = hh_fidelity_pair(t, t);
    EXPECT_GT((pair.y_high - pair.y_low).cwiseAbs().maxCoeff(), 1.0);
}

TEST(HHTrajectory, CsvHeaderAndRows)
{
    HHParameters p;
    const HHTrajectory tr = hh_simulate(p, hh_steady_state(-60.0), 0.05, 0.01);
    std::ostringstream out;
    write_trajectory_csv(out, tr);
    const std::string s = out.str();
    EXPECT_EQ(s.rfind("t,V,n,m,h\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 7);
}
