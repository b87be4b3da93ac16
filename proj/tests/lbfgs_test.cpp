#include <cmath>

#include <gtest/gtest.h>

#include "mfgp/lbfgs.hpp"

using namespace mfgp;

TEST(Lbfgs, Quadratic)
{
    Vector target(3);
    target << 1.0, -2.0, 0.5;
    const Vector scale = Vector::LinSpaced(3, 1.0, 100.0);
    const Objective f = [&](const Vector& x, Vector& g) {
        const Vector r = x - target;
        g = 2.0 * scale.cwiseProduct(r);
        return r.dot(scale.cwiseProduct(r));
    };
    const LbfgsResult res = minimize_lbfgs(f, Vector::Zero(3));
    EXPECT_TRUE(res.converged);
    EXPECT_LE((res.x - target).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Lbfgs, Rosenbrock)
{
    const Objective f = [](const Vector& x, Vector& g) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    Vector x0(2);
    x0 << -1.2, 1.0;
    LbfgsOptions opts;
    opts.max_iterations = 500;
    const LbfgsResult res = minimize_lbfgs(f, x0, opts);
    EXPECT_NEAR(res.x(0), 1.0, 1e-5);
    EXPECT_NEAR(res.x(1), 1.0, 1e-5);
}

TEST(LbfgsProperty, NeverIncreasesObjective)
{
    // Infeasible region x > 2 returns infinity; the search must back off and still descend.
    const Objective f = [](const Vector& x, Vector& g) {
        if (x(0) > 2.0)
            return std::numeric_limits<double>::infinity();
        g.resize(1);
        g(0) = -std::exp(-x(0)) + 0.1;
        return std::exp(-x(0)) + 0.1 * x(0);
    };
    for (double start : {-3.0, 0.0, 1.9}) {
        Vector x0(1);
        x0 << start;
        Vector g0(1);
        const double f0 = f(x0, g0);
        const LbfgsResult res = minimize_lbfgs(f, x0);
        EXPECT_LE(res.value, f0);
        EXPECT_LE(res.x(0), 2.0);
    }
}

TEST(Lbfgs, InfeasibleStartReturnsStart)
{
    const Objective f = [](const Vector&, Vector&) { return std::numeric_limits<double>::infinity(); };
    const LbfgsResult res = minimize_lbfgs(f, Vector::Ones(2));
    EXPECT_FALSE(std::isfinite(res.value));
    EXPECT_EQ(res.x, Vector::Ones(2));
}
