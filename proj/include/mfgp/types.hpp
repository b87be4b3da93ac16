#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace mfgp {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

/// Closed interval [lower, upper]; infinite bounds mean unbounded.
struct Interval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    double length() const { return upper - lower; }
    bool contains(double x) const { return x >= lower && x <= upper; }
    bool bounded() const
    {
        return lower > -std::numeric_limits<double>::infinity() &&
               upper < std::numeric_limits<double>::infinity();
    }

    static Interval unbounded() { return {}; }
};

/// Posterior summary at a set of query points.
struct Prediction {
    Vector mean;
    Vector variance;
};

/// Deterministic 64-bit mixing of a seed with a salt (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace mfgp
