#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mfgp/error.hpp"
#include "mfgp/types.hpp"

namespace mfgp {

/// Hyperparameters of the ARD radial-basis kernel
///
///   k(x, x') = signal_variance * exp(-1/2 * sum_i ard_weights[i] * (x_i - x'_i)^2)
///
/// plus an additive observation noise on the diagonal of the training covariance.
/// `ard_weights[i]` is an inverse squared length-scale for input dimension i.
template <typename Scalar>
struct BasicKernelParams {
    VectorX<Scalar> ard_weights;
    Scalar signal_variance = Scalar(1);
    Scalar noise_variance = Scalar(0);

    Index dim() const { return ard_weights.size(); }

    /// Throws InvalidArgument when an invariant is violated.
    void validate() const
    {
        for (Index i = 0; i < ard_weights.size(); ++i)
            if (!std::isfinite(ard_weights(i)) || ard_weights(i) < Scalar(0))
                throw InvalidArgument("ard weight " + std::to_string(i) + " must be finite and >= 0");
        if (!std::isfinite(signal_variance) || !(signal_variance > Scalar(0)))
            throw InvalidArgument("signal variance must be finite and > 0");
        if (!std::isfinite(noise_variance) || noise_variance < Scalar(0))
            throw InvalidArgument("noise variance must be finite and >= 0");
    }

    static BasicKernelParams isotropic(Index dim, Scalar weight, Scalar signal, Scalar noise = Scalar(0))
    {
        return {VectorX<Scalar>::Constant(dim, weight), signal, noise};
    }
};

using KernelParams = BasicKernelParams<double>;

/// Weighted squared distance sum_i w_i (a_i - b_i)^2. Symmetric in (a, b) bit for bit.
template <typename DerivedA, typename DerivedB, typename DerivedW>
typename DerivedA::Scalar weighted_sq_distance(const Eigen::MatrixBase<DerivedA>& a,
                                               const Eigen::MatrixBase<DerivedB>& b,
                                               const Eigen::MatrixBase<DerivedW>& w)
{
    using Scalar = typename DerivedA::Scalar;
    Scalar s(0);
    for (Index i = 0; i < w.size(); ++i) {
        const Scalar d = a(i) - b(i);
        s += w(i) * (d * d);
    }
    return s;
}

/// Kernel value between two points of equal dimension.
template <typename DerivedA, typename DerivedB, typename Scalar>
Scalar kernel_eval(const Eigen::MatrixBase<DerivedA>& x,
                   const Eigen::MatrixBase<DerivedB>& x_prime,
                   const BasicKernelParams<Scalar>& params)
{
    if (x.size() != params.dim() || x_prime.size() != params.dim())
        throw InvalidArgument("kernel_eval: point dimension " + std::to_string(x.size()) + "/" +
                              std::to_string(x_prime.size()) + " does not match " +
                              std::to_string(params.dim()) + " ARD weights");
    return params.signal_variance * std::exp(Scalar(-0.5) * weighted_sq_distance(x, x_prime, params.ard_weights));
}

/// Cross-covariance between the rows of `a` and the rows of `b` (noise excluded).
template <typename DerivedA, typename DerivedB, typename Scalar>
MatrixX<Scalar> cross_covariance(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b,
                                 const BasicKernelParams<Scalar>& params)
{
    if (a.cols() != params.dim() || b.cols() != params.dim())
        throw InvalidArgument("cross_covariance: input dimension does not match ARD weights");
    MatrixX<Scalar> k(a.rows(), b.rows());
    for (Index j = 0; j < b.rows(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            k(i, j) = params.signal_variance *
                      std::exp(Scalar(-0.5) * weighted_sq_distance(a.row(i), b.row(j), params.ard_weights));
    return k;
}

/// Symmetric Gram matrix of the rows of `x` (noise excluded).
template <typename Derived, typename Scalar>
MatrixX<Scalar> gram_matrix(const Eigen::MatrixBase<Derived>& x, const BasicKernelParams<Scalar>& params)
{
    if (x.cols() != params.dim())
        throw InvalidArgument("gram_matrix: input dimension does not match ARD weights");
    const Index n = x.rows();
    MatrixX<Scalar> k(n, n);
    for (Index j = 0; j < n; ++j) {
        k(j, j) = params.signal_variance;
        for (Index i = j + 1; i < n; ++i) {
            const Scalar v = params.signal_variance *
                             std::exp(Scalar(-0.5) * weighted_sq_distance(x.row(i), x.row(j), params.ard_weights));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// Per-dimension squared differences (x_i,d - x_j,d)^2, one N x N matrix per input dimension.
template <typename Derived>
std::vector<MatrixX<typename Derived::Scalar>> pairwise_sq_differences(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    std::vector<MatrixX<Scalar>> out;
    out.reserve(static_cast<std::size_t>(x.cols()));
    for (Index d = 0; d < x.cols(); ++d) {
        MatrixX<Scalar> m(x.rows(), x.rows());
        for (Index j = 0; j < x.rows(); ++j)
            for (Index i = 0; i < x.rows(); ++i) {
                const Scalar diff = x(i, d) - x(j, d);
                m(i, j) = diff * diff;
            }
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace mfgp
