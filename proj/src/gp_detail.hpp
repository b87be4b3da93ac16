#pragma once

// Internal helpers shared by the single-output GP and the two-block AR1 model.

#include <functional>
#include <random>
#include <vector>

#include "mfgp/gp.hpp"

namespace mfgp::detail {

/// Reference magnitudes used to place restart draws and the feasible box.
struct DataScale {
    Vector input_range;      // per dimension, 1 when degenerate
    double target_variance;  // 1 when degenerate
};

DataScale data_scale(const Matrix& inputs, const Vector& centered_targets);

/// Log-uniform draw in [lo, hi].
inline double log_uniform(std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return u(rng);
}

void check_finite(const Matrix& inputs, const Vector& targets, const char* what);

/// Throws NumericalError if two identical input rows carry different targets.
void check_conflicting_duplicates(const Matrix& inputs, const Vector& targets);

/// Gradient of 1/2 y'K^-1 y + ... with respect to one covariance direction dK: 1/2 sum(W .* dK).
inline double trace_product(const Matrix& w, const Matrix& dk) { return 0.5 * w.cwiseProduct(dk).sum(); }

/// Best point of a coarse grid over a shared length-scale and the noise level, around `reference`
/// (layout: weights..., log signal variance, [log noise variance]).
Vector profile_start(const Vector& reference, Index n_weights, bool free_noise,
                     const std::function<double(const Vector&)>& lml);

/// Evidence terms that need a factor: value, alpha and W = alpha alpha' - K^-1.
struct EvidenceTerms {
    double value;
    Vector alpha;
    Matrix w;
};

EvidenceTerms evidence_terms(const CholeskyFactor& factor, const Vector& y, bool with_w);

/// Refines `x` toward the solution of A x = b, with `solve` an approximate inverse (the jittered
/// factor). Returns the iterate with the smallest residual.
Vector refine_solution(const std::function<Vector(const Vector&)>& apply,
                       const std::function<Vector(const Vector&)>& solve, const Vector& b, Vector x);

} // namespace mfgp::detail
