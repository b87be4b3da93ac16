#pragma once

#include <iosfwd>
#include <vector>

#include "mfgp/fusion.hpp"
#include "mfgp/types.hpp"

namespace mfgp {

/// Membrane model with potentials in mV and time in ms.
struct HHParameters {
    double g_na = 1.2;
    double g_k = 0.36;
    double g_l = 0.003;
    double e_na = 55.17;
    double e_k = -72.14;
    double e_l = -49.42;
    double c_m = 0.01;
    double i_ext = 1.0;

    void validate() const;
};

struct HHState {
    double v = -60.0;
    double n = 0.0;
    double m = 0.0;
    double h = 0.0;
};

struct HHRates {
    double alpha_n, beta_n;
    double alpha_m, beta_m;
    double alpha_h, beta_h;
};

/// Classic squid-axon rates with the resting potential at -60 mV. The linear-over-exponential
/// forms of alpha_n and alpha_m use their analytic limits at the removable singularities.
HHRates hh_rates(double v);

/// Gates at their voltage-clamped fixed points alpha / (alpha + beta).
HHState hh_steady_state(double v);

/// Time derivative of the state. Channel currents enter with the standard positive sign:
/// C_m dV/dt = I_ext - g_na m^3 h (V - E_na) - g_k n^4 (V - E_k) - g_l (V - E_l).
HHState hh_derivative(const HHParameters& params, const HHState& s);

struct HHTrajectory {
    Vector t;
    std::vector<HHState> states;
    /// Largest distance any gate left [0, 1] before clamping.
    double max_gate_excursion = 0.0;

    Vector voltage() const;
    /// Cubic Hermite interpolation of V using the model's own dV/dt at the nodes.
    double voltage_at(double time, const HHParameters& params) const;
};

/// Fixed-step RK4 from t = 0 to t_end. Gates are clamped to [0, 1] after each step.
/// Throws IntegrationError with the step index on a non-finite state.
HHTrajectory hh_simulate(const HHParameters& params, const HHState& initial, double t_end, double dt);

/// Upward crossings of `threshold` (mV).
int count_spikes(const Vector& v, double threshold = -30.0);

/// The regression window: simulated times [start, start + length] map to [0, 1]. The lead-in
/// before `start` keeps delayed times inside the simulation.
struct HHWindow {
    double start = 20.0;
    double length = 40.0;
    double dt = 0.01;
    double i_ext_high = 1.0;
    double i_ext_low = 1.05;

    double to_ms(double s) const { return start + s * length; }
    /// Normalized times covered by the simulation, lead-in included.
    Interval simulated() const { return {-start / length, 1.0}; }
};

/// Both traces from the same resting initial state, sampled as V at normalized times.
struct HHFidelityModels {
    HHParameters high;
    HHParameters low;
    HHTrajectory high_trace;
    HHTrajectory low_trace;
    HHWindow window;

    double v_high(double s) const { return high_trace.voltage_at(window.to_ms(s), high); }
    double v_low(double s) const { return low_trace.voltage_at(window.to_ms(s), low); }
};

HHFidelityModels hh_fidelity_models(const HHWindow& window = {});

/// Samples the high trace (I_ext = 1.0) at `t_high` and the low trace (I_ext = 1.05) at `t_low`,
/// both in normalized time.
FidelityPair hh_fidelity_pair(const Vector& t_high, const Vector& t_low, const HHWindow& window = {});

/// CSV with columns t, V, n, m, h.
void write_trajectory_csv(std::ostream& out, const HHTrajectory& trajectory);

} // namespace mfgp
