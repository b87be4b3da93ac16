#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfgp/kernel.hpp"
#include "mfgp/lbfgs.hpp"
#include "mfgp/types.hpp"

namespace mfgp {

/// Diagonal inflation ladder used when a covariance matrix fails to factor. Levels are
/// relative to the mean kernel diagonal: initial, initial*growth, ... up to maximum.
struct JitterPolicy {
    double initial = 1e-10;
    double maximum = 1e-4;
    double growth = 10.0;

    std::vector<double> levels() const;
};

/// Lower Cholesky factor of a symmetric matrix plus the absolute jitter that made it factor.
struct CholeskyFactor {
    Matrix lower;
    double jitter = 0.0;

    double log_determinant() const;
    Vector solve(const Vector& rhs) const;
    Matrix solve(const Matrix& rhs) const;
};

/// Factors `k + jitter*I`, walking the jitter ladder scaled by `diag_scale`.
/// Throws NumericalError once the ladder is exhausted.
CholeskyFactor factorize(const Matrix& k, double diag_scale, const JitterPolicy& jitter = {});

/// Log marginal likelihood and its gradient with respect to the log-hyperparameters, ordered
/// [log ard_weights..., log signal_variance, log noise_variance].
struct LmlResult {
    double value = 0.0;
    Vector gradient;
    double jitter = 0.0;
};

/// Evaluates the evidence of `targets` (used as given, no centering) under a zero-mean GP.
LmlResult log_marginal_likelihood(const Matrix& inputs, const Vector& targets, const KernelParams& params,
                                  const JitterPolicy& jitter = {});

struct FitOptions {
    int restarts = 5;
    /// Restart initial values are drawn log-uniform in [init_min, init_max], relative to the
    /// data scale (input range per dimension, target variance).
    double init_min = 1e-2;
    double init_max = 1e2;
    /// Adds one start ahead of the random restarts, taken from the best point of a coarse grid over
    /// an isotropic length-scale (relative to the input range) and the noise level.
    bool profile_start = true;
    /// Pins the noise variance instead of optimizing it.
    std::optional<double> fixed_noise;
    /// Log-hyperparameters further than this from their data-scale reference are infeasible.
    double log_bound = 30.0;
    /// Tighter bound for the log signal variance. The jitter scales with the signal variance, so an
    /// unbounded one lets the search pass jitter off as noise.
    double signal_log_bound = 9.2;
    /// The search only accepts points that factor at the first jitter level; the full ladder is
    /// kept for the final conditioning.
    JitterPolicy jitter;
    LbfgsOptions optimizer;
};

struct RestartSummary {
    double initial_lml = 0.0;
    double final_lml = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Exact GP conditioned on training data. Immutable once built; safe to share across threads.
class TrainedGP {
public:
    /// Conditions on the data at fixed hyperparameters. Targets are centered and the mean kept.
    static TrainedGP condition(Matrix inputs, const Vector& targets, const KernelParams& params,
                               const JitterPolicy& jitter = {});

    const Matrix& inputs() const { return inputs_; }
    /// Centered training targets.
    const Vector& targets() const { return targets_; }
    double target_offset() const { return offset_; }
    const KernelParams& params() const { return params_; }
    const Matrix& chol_factor() const { return factor_.lower; }
    /// Weights solving (K + noise I) alpha = targets; refined so the jitter does not leak into the mean.
    const Vector& alpha() const { return alpha_; }
    double jitter() const { return factor_.jitter; }
    double log_marginal_likelihood() const { return lml_; }
    const std::vector<RestartSummary>& restarts() const { return restarts_; }

    Index size() const { return inputs_.rows(); }
    Index dim() const { return inputs_.cols(); }

    /// Posterior mean and latent-function variance (noise excluded) at the query rows. The variance
    /// comes from the jittered factor.
    Prediction predict(const Matrix& query) const;

private:
    friend TrainedGP fit(const Matrix&, const Vector&, std::uint64_t, const FitOptions&);

    TrainedGP() = default;

    Matrix inputs_;
    Vector targets_;
    double offset_ = 0.0;
    KernelParams params_;
    CholeskyFactor factor_;
    Vector alpha_;
    double lml_ = 0.0;
    std::vector<RestartSummary> restarts_;
};

/// Maximizes the log marginal likelihood over the kernel hyperparameters with multi-restart
/// L-BFGS in log space. The best restart wins; ties go to the lowest restart index.
TrainedGP fit(const Matrix& inputs, const Vector& targets, std::uint64_t seed, const FitOptions& options = {});

inline Prediction predict(const TrainedGP& model, const Matrix& query) { return model.predict(query); }

/// Convenience for 1-D inputs.
inline Matrix as_column(const Vector& t) { return Matrix(t); }

} // namespace mfgp
