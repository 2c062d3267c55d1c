#pragma once

#include <Eigen/Core>

#include "texbench/error.hpp"

namespace texbench {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw Error(std::string(what) + " contains non-finite values");
}

/// x -> sign(x) * sqrt(|x|), elementwise.
template <typename Derived>
auto signed_sqrt(const Eigen::MatrixBase<Derived>& v) {
    return (v.array().sign() * v.array().abs().sqrt()).matrix();
}

/// Scales `v` to unit L2 norm in place; a zero vector is left unchanged.
template <typename Derived>
void l2_normalize_inplace(Eigen::MatrixBase<Derived>& v) {
    const auto n = v.norm();
    if (n > 0) v /= n;
}

template <typename Derived>
typename Derived::PlainObject l2_normalized(const Eigen::MatrixBase<Derived>& v) {
    typename Derived::PlainObject out = v;
    l2_normalize_inplace(out);
    return out;
}

} // namespace texbench
