#pragma once

#include <cstdint>
#include <optional>

#include "mfgp/gp.hpp"

namespace mfgp {

/// Hyperparameters of the linear autoregressive (coKriging) covariance
///
///   cov(f_l, f_l) = k1,   cov(f_l, f_h) = rho k1,   cov(f_h, f_h) = rho^2 k1 + k2.
///
/// `low.noise_variance` is the observation noise of the low-fidelity block and
/// `diff.noise_variance` that of the high-fidelity block.
struct Ar1Params {
    KernelParams low;
    KernelParams diff;
    double rho = 1.0;
};

struct Ar1Options {
    FitOptions fit;
    /// Pins rho. With rho pinned to 0 the blocks decouple and are fitted independently.
    std::optional<double> fixed_rho;
    double rho_init = 1.0;
};

/// Evidence of the stacked data [y_low; y_high] (used as given) and its gradient, ordered
/// [log w1..., log s1, log w2..., log s2, rho, log noise_low, log noise_high].
LmlResult ar1_log_marginal_likelihood(const Matrix& x_low, const Vector& y_low, const Matrix& x_high,
                                      const Vector& y_high, const Ar1Params& params,
                                      const JitterPolicy& jitter = {});

/// Joint two-fidelity GP. Immutable once built.
class Ar1Model {
public:
    static Ar1Model condition(Matrix x_low, const Vector& y_low, Matrix x_high, const Vector& y_high,
                              const Ar1Params& params, const JitterPolicy& jitter = {});

    const Ar1Params& params() const { return params_; }
    double log_marginal_likelihood() const { return lml_; }
    Index dim() const { return x_low_.cols(); }
    const Matrix& chol_factor() const { return lower_; }
    double jitter_level() const { return level_; }

    /// Posterior of f_h conditioned on both blocks; latent variance, noise excluded.
    Prediction predict(const Matrix& query) const;

private:
    Ar1Model() = default;

    Matrix x_low_;
    Matrix x_high_;
    double offset_low_ = 0.0;
    double offset_high_ = 0.0;
    Ar1Params params_;
    Matrix lower_;   // full lower factor of the joint covariance
    Vector alpha_;   // stacked [alpha_low; alpha_high]
    double level_ = 0.0;
    double lml_ = 0.0;
};

/// Maximizes the joint evidence over both kernels, rho and the two noise levels.
/// `low_start`, when given, seeds the first start's k1 from an already fitted low-fidelity GP.
Ar1Model fit_ar1(const Matrix& x_low, const Vector& y_low, const Matrix& x_high, const Vector& y_high,
                 std::uint64_t seed, const Ar1Options& options = {}, const TrainedGP* low_start = nullptr);

} // namespace mfgp
