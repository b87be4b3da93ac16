#include "mfgp/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace mfgp {

namespace {

    struct Sample {
        double step;
        double value;
        double slope;
    };

    // Minimizer of the cubic through two (step, value, slope) samples, or the bisection point
    // when the cubic is degenerate or lands outside the safeguarded interior of [lo, hi].
    double cubic_step(const Sample& a, const Sample& b)
    {
        const double lo = std::min(a.step, b.step);
        const double hi = std::max(a.step, b.step);
        const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
        const double disc = d1 * d1 - a.slope * b.slope;
        if (disc >= 0.0) {
            const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
            const double denom = b.slope - a.slope + 2.0 * d2;
            if (denom != 0.0) {
                const double t = b.step - (b.step - a.step) * (b.slope + d2 - d1) / denom;
                const double margin = 0.1 * (hi - lo);
                if (std::isfinite(t) && t > lo + margin && t < hi - margin)
                    return t;
            }
        }
        return 0.5 * (lo + hi);
    }

    class LineSearch {
    public:
        LineSearch(const Objective& f, const Vector& x, const Vector& dir, double f0, double slope0, int max_steps)
            : f_(f), x_(x), dir_(dir), f0_(f0), slope0_(slope0), max_steps_(max_steps), grad_(x.size())
        {
        }

        // Strong Wolfe conditions with c1 = 1e-4, c2 = 0.9. Returns false when no acceptable
        // step with a lower objective was found.
        bool run(double initial_step)
        {
            constexpr double c1 = 1e-4;
            constexpr double c2 = 0.9;
            Sample prev{0.0, f0_, slope0_};
            double step = initial_step;
            for (int i = 0; i < max_steps_; ++i) {
                Sample cur = evaluate(step);
                if (!std::isfinite(cur.value)) {
                    // Infeasible: shrink toward the last good point.
                    step = prev.step + 0.1 * (step - prev.step);
                    continue;
                }
                if (cur.value > f0_ + c1 * step * slope0_ || (i > 0 && cur.value >= prev.value))
                    return zoom(prev, cur, i);
                if (std::abs(cur.slope) <= -c2 * slope0_)
                    return accept(cur);
                if (cur.slope >= 0.0)
                    return zoom(cur, prev, i);
                prev = cur;
                step *= 2.0;
            }
            return best_.value < f0_;
        }

        const Vector& x() const { return best_x_; }
        const Vector& grad() const { return best_grad_; }
        double value() const { return best_.value; }
        int evaluations() const { return evaluations_; }

    private:
        Sample evaluate(double step)
        {
            ++evaluations_;
            Vector trial = x_ + step * dir_;
            grad_.setZero();
            double value = f_(trial, grad_);
            if (!std::isfinite(value) || !grad_.allFinite())
                return {step, std::numeric_limits<double>::infinity(), 0.0};
            Sample s{step, value, grad_.dot(dir_)};
            if (value < best_.value) {
                best_ = s;
                best_x_ = std::move(trial);
                best_grad_ = grad_;
            }
            return s;
        }

        // The lowest sample seen is kept, which is the Wolfe point unless an earlier
        // rejected step happened to be lower still.
        bool accept(const Sample&) { return best_.value < f0_; }

        bool zoom(Sample lo, Sample hi, int used)
        {
            constexpr double c1 = 1e-4;
            constexpr double c2 = 0.9;
            for (int i = used; i < max_steps_; ++i) {
                if (std::abs(hi.step - lo.step) < 1e-16 * std::max(1.0, std::abs(lo.step)))
                    break;
                double step = std::isfinite(hi.value) ? cubic_step(lo, hi) : 0.5 * (lo.step + hi.step);
                Sample cur = evaluate(step);
                if (!std::isfinite(cur.value) || cur.value > f0_ + c1 * step * slope0_ || cur.value >= lo.value) {
                    hi = cur;
                    continue;
                }
                if (std::abs(cur.slope) <= -c2 * slope0_)
                    return accept(cur);
                if (cur.slope * (hi.step - lo.step) >= 0.0)
                    hi = lo;
                lo = cur;
            }
            return best_.value < f0_;
        }

        const Objective& f_;
        const Vector& x_;
        const Vector& dir_;
        double f0_;
        double slope0_;
        int max_steps_;
        Vector grad_;
        Sample best_{0.0, std::numeric_limits<double>::infinity(), 0.0};
        Vector best_x_;
        Vector best_grad_;
        int evaluations_ = 0;
    };

} // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options)
{
    LbfgsResult result;
    result.x = std::move(x0);
    Vector grad = Vector::Zero(result.x.size());
    result.value = objective(result.x, grad);
    result.evaluations = 1;
    if (!std::isfinite(result.value) || !grad.allFinite()) {
        result.value = std::numeric_limits<double>::infinity();
        return result;
    }

    std::deque<Vector> s_hist;
    std::deque<Vector> y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        Vector dir = -grad;
        const std::size_t m = s_hist.size();
        std::vector<double> alpha(m);
        for (std::size_t k = m; k-- > 0;) {
            alpha[k] = rho_hist[k] * s_hist[k].dot(dir);
            dir -= alpha[k] * y_hist[k];
        }
        if (m > 0)
            dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho_hist[k] * y_hist[k].dot(dir);
            dir += (alpha[k] - beta) * s_hist[k];
        }

        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -grad;
            slope = grad.dot(dir);
        }
        const double initial_step = m == 0 ? std::min(1.0, 1.0 / grad.lpNorm<Eigen::Infinity>()) : 1.0;

        LineSearch ls(objective, result.x, dir, result.value, slope, options.max_line_search_steps);
        const bool ok = ls.run(initial_step);
        result.evaluations += ls.evaluations();
        if (!ok) {
            if (m == 0)
                break;
            // Retry from steepest descent once the curvature history is stale.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }

        Vector s = ls.x() - result.x;
        Vector y = ls.grad() - grad;
        const double previous = result.value;
        result.x = ls.x();
        grad = ls.grad();
        result.value = ls.value();
        result.iterations = iter + 1;

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > options.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        if (previous - result.value <= options.relative_tolerance * std::max(1.0, std::abs(result.value))) {
            result.converged = true;
            break;
        }
    }
    return result;
}

} // namespace mfgp
