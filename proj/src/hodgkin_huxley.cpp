#include "mfgp/hodgkin_huxley.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "csv_detail.hpp"
#include "mfgp/error.hpp"

namespace mfgp {

namespace {

    // u / (1 - exp(-u)), equal to 1 at u = 0.
    double exprel(double u)
    {
        if (std::abs(u) < 1e-8)
            return 1.0 + 0.5 * u;
        return u / -std::expm1(-u);
    }

    HHState axpy(const HHState& s, double a, const HHState& d)
    {
        return {s.v + a * d.v, s.n + a * d.n, s.m + a * d.m, s.h + a * d.h};
    }

    bool finite(const HHState& s)
    {
        return std::isfinite(s.v) && std::isfinite(s.n) && std::isfinite(s.m) && std::isfinite(s.h);
    }

    double clamp_gate(double& g)
    {
        const double excursion = std::max({0.0, -g, g - 1.0});
        g = std::clamp(g, 0.0, 1.0);
        return excursion;
    }

} // namespace

void HHParameters::validate() const
{
    if (!(g_na > 0.0 && g_k > 0.0 && g_l > 0.0))
        throw InvalidArgument("HH parameters: conductances must be > 0");
    if (!(c_m > 0.0))
        throw InvalidArgument("HH parameters: membrane capacitance must be > 0");
    for (double x : {e_na, e_k, e_l, i_ext})
        if (!std::isfinite(x))
            throw InvalidArgument("HH parameters: potentials and current must be finite");
}

HHRates hh_rates(double v)
{
    HHRates r;
    r.alpha_n = 0.1 * exprel((v + 50.0) / 10.0);
    r.beta_n = 0.125 * std::exp(-(v + 60.0) / 80.0);
    r.alpha_m = exprel((v + 35.0) / 10.0);
    r.beta_m = 4.0 * std::exp(-(v + 60.0) / 18.0);
    r.alpha_h = 0.07 * std::exp(-(v + 60.0) / 20.0);
    r.beta_h = 1.0 / (1.0 + std::exp(-(v + 30.0) / 10.0));
    return r;
}

HHState hh_steady_state(double v)
{
    const HHRates r = hh_rates(v);
    return {v, r.alpha_n / (r.alpha_n + r.beta_n), r.alpha_m / (r.alpha_m + r.beta_m),
            r.alpha_h / (r.alpha_h + r.beta_h)};
}

HHState hh_derivative(const HHParameters& p, const HHState& s)
{
    const HHRates r = hh_rates(s.v);
    const double i_na = p.g_na * s.m * s.m * s.m * s.h * (s.v - p.e_na);
    const double i_k = p.g_k * s.n * s.n * s.n * s.n * (s.v - p.e_k);
    const double i_l = p.g_l * (s.v - p.e_l);
    HHState d;
    d.v = (p.i_ext - i_na - i_k - i_l) / p.c_m;
    d.n = r.alpha_n * (1.0 - s.n) - r.beta_n * s.n;
    d.m = r.alpha_m * (1.0 - s.m) - r.beta_m * s.m;
    d.h = r.alpha_h * (1.0 - s.h) - r.beta_h * s.h;
    return d;
}

HHTrajectory hh_simulate(const HHParameters& params, const HHState& initial, double t_end, double dt)
{
    params.validate();
    if (!(dt > 0.0 && std::isfinite(dt)) || !(t_end > 0.0 && std::isfinite(t_end)))
        throw InvalidArgument("hh_simulate: dt and t_end must be finite and > 0");
    for (double g : {initial.n, initial.m, initial.h})
        if (!(g >= 0.0 && g <= 1.0))
            throw InvalidArgument("hh_simulate: initial gates must lie in [0, 1]");

    const long steps = std::lround(std::ceil(t_end / dt - 1e-9));
    HHTrajectory out;
    out.t.resize(steps + 1);
    out.states.reserve(static_cast<std::size_t>(steps + 1));
    out.t(0) = 0.0;
    out.states.push_back(initial);
    HHState s = initial;
    for (long k = 1; k <= steps; ++k) {
        const HHState k1 = hh_derivative(params, s);
        const HHState k2 = hh_derivative(params, axpy(s, 0.5 * dt, k1));
        const HHState k3 = hh_derivative(params, axpy(s, 0.5 * dt, k2));
        const HHState k4 = hh_derivative(params, axpy(s, dt, k3));
        s.v += dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        s.n += dt / 6.0 * (k1.n + 2.0 * k2.n + 2.0 * k3.n + k4.n);
        s.m += dt / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
        s.h += dt / 6.0 * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
        if (!finite(s))
            throw IntegrationError("hh_simulate: non-finite state at step " + std::to_string(k), k);
        out.max_gate_excursion =
            std::max({out.max_gate_excursion, clamp_gate(s.n), clamp_gate(s.m), clamp_gate(s.h)});
        out.t(k) = static_cast<double>(k) * dt;
        out.states.push_back(s);
    }
    return out;
}

Vector HHTrajectory::voltage() const
{
    Vector v(static_cast<Index>(states.size()));
    for (std::size_t i = 0; i < states.size(); ++i)
        v(static_cast<Index>(i)) = states[i].v;
    return v;
}

double HHTrajectory::voltage_at(double time, const HHParameters& params) const
{
    const Index n = t.size();
    if (n < 2 || time < t(0) || time > t(n - 1))
        throw DomainError("trajectory: time " + std::to_string(time) + " outside the simulated span");
    const Index i = std::min<Index>(static_cast<Index>(std::upper_bound(t.data(), t.data() + n, time) - t.data()) - 1,
                                    n - 2);
    const double h = t(i + 1) - t(i);
    const double s = (time - t(i)) / h;
    const HHState& a = states[static_cast<std::size_t>(i)];
    const HHState& b = states[static_cast<std::size_t>(i + 1)];
    const double da = hh_derivative(params, a).v;
    const double db = hh_derivative(params, b).v;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * a.v + (s3 - 2 * s2 + s) * h * da + (-2 * s3 + 3 * s2) * b.v + (s3 - s2) * h * db;
}

int count_spikes(const Vector& v, double threshold)
{
    int count = 0;
    for (Index i = 1; i < v.size(); ++i)
        if (v(i - 1) < threshold && v(i) >= threshold)
            ++count;
    return count;
}

HHFidelityModels hh_fidelity_models(const HHWindow& window)
{
    if (!(window.start > 0.0 && window.length > 0.0))
        throw InvalidArgument("HH window: start and length must be > 0");
    HHFidelityModels m;
    m.window = window;
    m.high.i_ext = window.i_ext_high;
    m.low.i_ext = window.i_ext_low;
    const HHState rest = hh_steady_state(-60.0);
    const double t_end = window.start + window.length;
    m.high_trace = hh_simulate(m.high, rest, t_end, window.dt);
    m.low_trace = hh_simulate(m.low, rest, t_end, window.dt);
    return m;
}

FidelityPair hh_fidelity_pair(const Vector& t_high, const Vector& t_low, const HHWindow& window)
{
    const HHFidelityModels m = hh_fidelity_models(window);
    FidelityPair pair;
    pair.domain = {0.0, 1.0};
    pair.t_high = t_high;
    pair.t_low = t_low;
    pair.y_high.resize(t_high.size());
    pair.y_low.resize(t_low.size());
    for (Index i = 0; i < t_high.size(); ++i)
        pair.y_high(i) = m.v_high(t_high(i));
    for (Index i = 0; i < t_low.size(); ++i)
        pair.y_low(i) = m.v_low(t_low(i));
    pair.validate();
    return pair;
}

void write_trajectory_csv(std::ostream& out, const HHTrajectory& trajectory)
{
    out << "t,V,n,m,h\n";
    for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
        const HHState& s = trajectory.states[i];
        out << detail::format_number(trajectory.t(static_cast<Index>(i))) << ',' << detail::format_number(s.v) << ','
            << detail::format_number(s.n) << ',' << detail::format_number(s.m) << ',' << detail::format_number(s.h)
            << '\n';
    }
}

} // namespace mfgp
