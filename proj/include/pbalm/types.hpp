#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace pbalm {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

class DimensionMismatch : public std::invalid_argument {
public:
    DimensionMismatch(const std::string& what, Eigen::Index expected, Eigen::Index got)
        : std::invalid_argument(what + ": expected length " + std::to_string(expected) +
                                ", got " + std::to_string(got)) {}
};

inline void require_size(const char* what, Eigen::Index expected, Eigen::Index got)
{
    if (expected != got) throw DimensionMismatch(what, expected, got);
}

/// Max-norm; zero for an empty vector so that p = 0 / m = 0 problems terminate.
template <typename Derived>
typename Derived::Scalar inf_norm(const Eigen::MatrixBase<Derived>& v)
{
    if (v.size() == 0) return typename Derived::Scalar(0);
    return v.cwiseAbs().maxCoeff();
}

template <typename Derived>
auto positive_part(const Eigen::MatrixBase<Derived>& v)
{
    return v.cwiseMax(typename Derived::Scalar(0));
}

/// Broadcasts a penalty of length 1 (scalar mode) to `n` components.
/// Per-constraint penalties (length n) pass through unchanged.
template <typename Scalar>
VectorX<Scalar> expand_weights(const VectorX<Scalar>& w, Eigen::Index n)
{
    if (w.size() == n) return w;
    if (w.size() == 1) return VectorX<Scalar>::Constant(n, w(0));
    throw DimensionMismatch("penalty vector", n, w.size());
}

template <typename Scalar>
Scalar infinity()
{
    return std::numeric_limits<Scalar>::infinity();
}

} // namespace pbalm
