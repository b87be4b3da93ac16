#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mfgp/benchmarks.hpp"
#include "mfgp/config.hpp"
#include "mfgp/error.hpp"
#include "mfgp/fusion.hpp"
#include "mfgp/harness.hpp"
#include "oracles.hpp"

using namespace mfgp;

namespace {

FidelityPair pair_for(const BenchmarkPair& b, int n_high, int n_low, std::uint64_t seed)
{
    FidelityPair p;
    p.domain = b.domain;
    p.t_high = sample_high_fidelity(b.domain, n_high, seed);
    p.y_high = b.high(p.t_high);
    p.t_low = uniform_grid(b.domain, n_low);
    p.y_low = b.low(p.t_low);
    return p;
}

double relative_l2(const Vector& pred, const Vector& truth) { return (pred - truth).norm() / truth.norm(); }

} // namespace

TEST(MethodSpec, NamedIds)
{
    for (const std::string& id : MethodSpec::known_ids())
        EXPECT_EQ(MethodSpec::named(id).id, id);
    EXPECT_EQ(MethodSpec::named("gpe").embedding.num_delays, 2);
    EXPECT_EQ(MethodSpec::named("gpe2").embedding.num_delays, 4);
    EXPECT_FALSE(MethodSpec::named("delays").embedding.include_t);
    EXPECT_THROW(MethodSpec::named("nope"), InvalidArgument);
}

TEST(FidelityPair, Validation)
{
    FidelityPair p;
    p.t_high = Vector::Constant(2, 0.5);
    p.y_high = Vector::Zero(1);
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.y_high = Vector::Zero(2);
    EXPECT_NO_THROW(p.validate());
    p.t_high(0) = 1.5;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.t_high(0) = 0.5;
    p.t_low = uniform_grid(p.domain, 50);
    p.y_low = Vector::Zero(50);
    EXPECT_DOUBLE_EQ(p.default_delay_step(), 1.0 / 50.0);
}

TEST(FusionReduction, EmbeddingWithoutDelaysIsNargp)
{
    const BenchmarkPair b = benchmark("embed_demo");
    const FidelityPair pair = pair_for(b, 7, 100, 12);
    const Vector test = uniform_grid(b.domain, 300);
    const Prediction nargp = build_nargp(pair, 5).predict(test);
    const Prediction gpe = build_gpe(pair, {0, 0.0, true, true}, 5).predict(test);
    EXPECT_LE((nargp.mean - gpe.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((nargp.variance - gpe.variance).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FusionReduction, TimeOnlyEmbeddingIsKriging)
{
    const BenchmarkPair b = benchmark("phase_shift");
    const FidelityPair pair = pair_for(b, 10, 100, 3);
    const Vector test = uniform_grid(b.domain, 300);
    const Prediction kriging = build_kriging(pair, 9).predict(test);
    const Prediction gpe = build_gpe(pair, {0, 0.0, true, false}, 9).predict(test);
    EXPECT_LE((kriging.mean - gpe.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((kriging.variance - gpe.variance).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FusionReduction, ZeroScalingAr1IsKriging)
{
    for (const char* name : {"phase_shift", "discontinuity"}) {
        const BenchmarkPair b = benchmark(name);
        const FidelityPair pair = pair_for(b, 10, 60, 21);
        const Vector test = uniform_grid(b.domain, 300);
        const Prediction kriging = build_kriging(pair, 4).predict(test);
        const FusionModel ar1 = build_ar1(pair, 4, {}, nullptr, 0.0);
        ASSERT_TRUE(ar1.rho().has_value());
        EXPECT_EQ(*ar1.rho(), 0.0);
        const Prediction p = ar1.predict(test);
        EXPECT_LE((kriging.mean - p.mean).cwiseAbs().maxCoeff(), 1e-8) << name;
        EXPECT_LE((kriging.variance - p.variance).cwiseAbs().maxCoeff(), 1e-8) << name;
    }
}

TEST(Fusion, KrigingLinearTwoPoints)
{
    FidelityPair pair;
    pair.t_high.resize(2);
    pair.t_high << 0.2, 0.8;
    pair.y_high = 3.0 * pair.t_high.array() - 1.0;
    FusionOptions opts;
    opts.fit.fixed_noise = 0.0;
    // Two points carry no length-scale information: the evidence peaks at independent points, so a
    // fitted model only has to reproduce the data and their mean.
    Vector at(3);
    at << 0.2, 0.5, 0.8;
    const Vector fitted = build_kriging(pair, 1, opts).predict(at).mean;
    EXPECT_LE((fitted - Vector(3.0 * at.array() - 1.0)).cwiseAbs().maxCoeff(), 1e-4);
    // With a length-scale long against the gap the mean is the straight line through them.
    const TrainedGP gp = TrainedGP::condition(as_column(pair.t_high), pair.y_high,
                                              KernelParams::isotropic(1, 1e-4, 1.0));
    const Vector seg = oracle::linspace(0.2, 0.8, 61);
    EXPECT_LE((gp.predict(as_column(seg)).mean - Vector(3.0 * seg.array() - 1.0)).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Fusion, KrigingSinglePointRevertsToConstant)
{
    FidelityPair pair;
    pair.t_high = Vector::Constant(1, 0.4);
    pair.y_high = Vector::Constant(1, 2.5);
    const FusionModel m = build_kriging(pair, 1);
    Vector far(1);
    far << 1.0;
    EXPECT_NEAR(m.predict(far).mean(0), 2.5, 1e-9);
}

TEST(Fusion, KrigingMissesHighFrequency)
{
    const BenchmarkPair b = benchmark("simple");
    const FidelityPair pair = pair_for(b, 15, 100, 1);
    const Vector test = uniform_grid(b.domain, 1000);
    EXPECT_GT(relative_l2(build_kriging(pair, 2).predict(test).mean, b.high(test)), 0.1);
}

TEST(Fusion, GpOnLowFidelityCapturesQuadratic)
{
    const BenchmarkPair b = benchmark("simple");
    const FidelityPair pair = pair_for(b, 15, 100, 1);
    const Vector test = uniform_grid(b.domain, 1000);
    const Prediction p = run_fusion_pipeline(pair, MethodSpec::named("gp_fl"), test, 2);
    EXPECT_LE(relative_l2(p.mean, b.high(test)), 1e-2);
}

TEST(Fusion, NargpLearnsIdentity)
{
    FidelityPair pair;
    auto f = [](const Vector& t) { return Vector((10.0 * t.array()).sin() + t.array().square()); };
    pair.t_high = sample_high_fidelity(pair.domain, 12, 8);
    pair.y_high = f(pair.t_high);
    pair.t_low = uniform_grid(pair.domain, 80);
    pair.y_low = f(pair.t_low);
    const auto exact = std::make_shared<AnalyticEvaluator>([](double t) { return std::sin(10.0 * t) + t * t; });
    const Vector test = uniform_grid(pair.domain, 500);
    EXPECT_LE(relative_l2(build_nargp(pair, 1, {}, exact).predict(test).mean, f(test)), 1e-3);
}

TEST(Fusion, NargpReconstructsSquaredSine)
{
    // Seven points of the squared sine; averaged over the harness draws, since one unlucky
    // draw can leave a hump unsampled.
    const ExperimentConfig cfg = default_config("embed_demo");
    const BenchmarkPair b = benchmark("embed_demo");
    const Vector test = uniform_grid(b.domain, 500);
    double log_sum = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const FidelityPair pair = experiment_pair(b, cfg, 7, trial);
        log_sum += std::log10(relative_l2(build_nargp(pair, 1).predict(test).mean, b.high(test)));
    }
    EXPECT_LE(log_sum / 10.0, std::log10(5e-2));
}

TEST(Fusion, Ar1ExactLinearCorrelation)
{
    FidelityPair pair;
    auto f_low = [](const Vector& t) { return Vector((6.0 * t.array()).sin() + 0.5 * t.array()); };
    pair.t_low = uniform_grid(pair.domain, 50);
    pair.y_low = f_low(pair.t_low);
    pair.t_high = uniform_grid(pair.domain, 20);
    pair.y_high = 2.0 * f_low(pair.t_high);
    const Vector test = uniform_grid(pair.domain, 500);
    EXPECT_LE(relative_l2(build_ar1(pair, 2).predict(test).mean, 2.0 * f_low(test)), 1e-3);
}

TEST(Fusion, Ar1WorseThanNargpOnNonlinearCorrelation)
{
    const ExperimentConfig cfg = default_config("embed_demo");
    const BenchmarkPair b = benchmark("embed_demo");
    const Vector test = uniform_grid(b.domain, 500);
    const Vector truth = b.high(test);
    double ar1 = 0.0;
    double nargp = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const FidelityPair pair = experiment_pair(b, cfg, 7, trial);
        const auto low = low_fidelity_surrogate(pair, 1);
        ar1 += std::log10(relative_l2(build_ar1(pair, 1, {}, low).predict(test).mean, truth));
        nargp += std::log10(relative_l2(build_nargp(pair, 1, {}, low).predict(test).mean, truth));
    }
    EXPECT_GT(ar1, nargp);
}

TEST(Fusion, PipelineMatchesDirectBuild)
{
    const BenchmarkPair b = benchmark("phase_shift");
    const FidelityPair pair = pair_for(b, 10, 100, 5);
    const Vector test = uniform_grid(b.domain, 200);
    const Prediction direct = build_kriging(pair, 3).predict(test);
    const Prediction piped = run_fusion_pipeline(pair, MethodSpec::named("kriging"), test, 3);
    EXPECT_EQ(direct.mean, piped.mean);
    EXPECT_EQ(direct.variance, piped.variance);
    Vector outside(1);
    outside << 1.5;
    EXPECT_THROW(run_fusion_pipeline(pair, MethodSpec::named("kriging"), outside, 3), InvalidArgument);
}

TEST(FusionProperty, FiniteMeansAndNonNegativeVariances)
{
    for (const std::string& name : {"simple", "embed_demo", "phase_shift", "periodicity", "discontinuity"}) {
        const BenchmarkPair b = benchmark(name);
        const FidelityPair pair = pair_for(b, b.default_n_high, b.default_n_low, 2);
        const auto low = low_fidelity_surrogate(pair, 1);
        const Vector test = uniform_grid(b.domain, 200);
        for (const std::string& id : {"kriging", "ar1", "nargp", "gpe", "gpe2", "delays"}) {
            const Prediction p = build_model(pair, MethodSpec::named(id), 3, {}, low).predict(test);
            EXPECT_TRUE(p.mean.allFinite()) << name << " " << id;
            EXPECT_GE(p.variance.minCoeff(), 0.0) << name << " " << id;
        }
    }
}

TEST(FusionProperty, NoiseFreeFitsReproduceTargets)
{
    FusionOptions opts;
    opts.fit.fixed_noise = 0.0;
    for (const std::string& name : {"simple", "phase_shift", "discontinuity"}) {
        const ExperimentConfig cfg = default_config(name);
        const BenchmarkPair b = benchmark(name);
        for (int trial = 0; trial < 2; ++trial) {
            const FidelityPair pair = experiment_pair(b, cfg, cfg.n_high.front(), trial);
            const auto low = low_fidelity_surrogate(pair, 1, opts.fit);
            for (const std::string& id : {"kriging", "ar1", "nargp", "gpe"}) {
                MethodSpec spec = MethodSpec::named(id);
                if (spec.embedding.num_delays > 0)
                    spec.embedding.delay_step = b.delay_step.value_or(pair.default_delay_step());
                const FusionModel m = build_model(pair, spec, 2, opts, low);
                EXPECT_LE((m.predict(pair.t_high).mean - pair.y_high).cwiseAbs().maxCoeff(), 1e-4)
                    << name << " " << id << " " << trial;
            }
        }
    }
}

TEST(FusionProperty, ColumnPermutationLeavesPredictionsUnchanged)
{
    // Refit on permuted columns at the hyperparameters found for the original order.
    const BenchmarkPair b = benchmark("phase_shift");
    const FidelityPair pair = pair_for(b, 12, 100, 4);
    const AnalyticEvaluator f(b.f_low);
    const EmbeddingConfig config{2, 0.01, true, true};
    const Matrix x = build_embedding(pair.t_high, f, config);
    const TrainedGP gp = fit(x, pair.y_high, 3);
    const Eigen::PermutationMatrix<Eigen::Dynamic> perm(Eigen::Vector4i(2, 0, 3, 1));
    KernelParams permuted = gp.params();
    permuted.ard_weights = perm * gp.params().ard_weights;
    const TrainedGP gp_perm = TrainedGP::condition(x * perm.transpose(), pair.y_high, permuted);
    const Vector test = uniform_grid(b.domain, 200);
    const Matrix q = build_embedding(test, f, config);
    EXPECT_LE((gp.predict(q).mean - gp_perm.predict(q * perm.transpose()).mean).cwiseAbs().maxCoeff(), 1e-10);
    // A fresh fit on the permuted columns reaches the same evidence.
    EXPECT_NEAR(fit(x * perm.transpose(), pair.y_high, 3).log_marginal_likelihood(), gp.log_marginal_likelihood(),
                1e-3 * std::abs(gp.log_marginal_likelihood()));
}
