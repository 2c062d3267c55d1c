#pragma once

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "texbench/codebook.hpp"
#include "texbench/error.hpp"
#include "texbench/matrix.hpp"

namespace texbench {

enum class FeatureKind { Bovw, Vlad, Fisher, Cnn, Raw };

/// Fixed-length encoding of one patch.
struct FeatureVector {
    Eigen::VectorXf values;
    FeatureKind kind = FeatureKind::Raw;
    std::string layer; ///< set for FeatureKind::Cnn

    Eigen::Index dim() const noexcept { return values.size(); }
    /// "bovw", "vlad", "fisher", "raw" or "cnn:<layer>".
    std::string provenance() const;
};

inline std::string FeatureVector::provenance() const {
    switch (kind) {
    case FeatureKind::Bovw: return "bovw";
    case FeatureKind::Vlad: return "vlad";
    case FeatureKind::Fisher: return "fisher";
    case FeatureKind::Cnn: return "cnn:" + layer;
    case FeatureKind::Raw: return "raw";
    }
    return "?";
}

namespace detail {

template <typename Scalar, typename Derived>
void check_dims(Eigen::Index model_dim, const Eigen::MatrixBase<Derived>& x, const char* what) {
    if (x.rows() > 0 && x.cols() != model_dim)
        throw ShapeError(std::string(what) + ": descriptors of dimension " + std::to_string(x.cols()) +
                         ", model dimension " + std::to_string(model_dim));
}

} // namespace detail

/// Hard-assignment histogram, L1-normalized by the descriptor count.
template <typename Scalar, typename Derived>
FeatureVector encode_bovw(const Codebook<Scalar>& codebook, const Eigen::MatrixBase<Derived>& x) {
    detail::check_dims<Scalar>(codebook.dim(), x, "encode_bovw");
    FeatureVector f;
    f.kind = FeatureKind::Bovw;
    f.values = Eigen::VectorXf::Zero(codebook.words());
    if (x.rows() == 0) return f;
    Vector<double> hist = Vector<double>::Zero(codebook.words());
    for (Eigen::Index w : assign_all(codebook, x)) hist(w) += 1.0;
    f.values = (hist / static_cast<double>(x.rows())).template cast<float>();
    return f;
}

/// Residual sums per nearest word, concatenated (k*d) before normalization.
template <typename Scalar, typename Derived>
Vector<double> vlad_raw(const Codebook<Scalar>& codebook, const Eigen::MatrixBase<Derived>& x) {
    detail::check_dims<Scalar>(codebook.dim(), x, "encode_vlad");
    const Eigen::Index d = codebook.dim();
    Vector<double> v = Vector<double>::Zero(codebook.words() * d);
    if (x.rows() == 0) return v;
    const auto words = assign_all(codebook, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::Index w = words[static_cast<std::size_t>(i)];
        v.segment(w * d, d) += (x.row(i).template cast<double>() - codebook.centroids.row(w).template cast<double>()).transpose();
    }
    return v;
}

/// VLAD with signed square root and global L2 normalization.
template <typename Scalar, typename Derived>
FeatureVector encode_vlad(const Codebook<Scalar>& codebook, const Eigen::MatrixBase<Derived>& x) {
    Vector<double> v = signed_sqrt(vlad_raw(codebook, x));
    l2_normalize_inplace(v);
    return {v.template cast<float>(), FeatureKind::Vlad, {}};
}

/// Fisher vector before power and L2 normalization: all mean gradients
/// (k*d), then all standard-deviation gradients (k*d), each scaled by the
/// diagonal Fisher information and averaged over the n descriptors.
template <typename Scalar, typename Derived>
Vector<double> fisher_raw(const GmmModel<Scalar>& gmm, const Eigen::MatrixBase<Derived>& x) {
    detail::check_dims<Scalar>(gmm.dim(), x, "encode_fisher");
    const Eigen::Index k = gmm.components();
    const Eigen::Index d = gmm.dim();
    Vector<double> fv = Vector<double>::Zero(2 * k * d);
    const Eigen::Index n = x.rows();
    if (n == 0) return fv;

    const Vector<double> w = gmm.weights.template cast<double>();
    const RowMatrix<double> mu = gmm.means.template cast<double>();
    const RowMatrix<double> var = gmm.variances.template cast<double>();
    const RowMatrix<double> inv_sd = var.cwiseSqrt().cwiseInverse();
    RowMatrix<double> gamma = detail::gmm_log_joint(Vector<double>(w / w.sum()), mu, var, x);
    detail::normalize_rows(gamma);

    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector<double> xi = x.row(i).template cast<double>().transpose();
        for (Eigen::Index j = 0; j < k; ++j) {
            const double g = gamma(i, j);
            if (g == 0.0) continue;
            const Eigen::ArrayXd z = (xi.array() - mu.row(j).transpose().array()) * inv_sd.row(j).transpose().array();
            fv.segment(j * d, d).array() += g * z;
            fv.segment((k + j) * d, d).array() += g * (z.square() - 1.0);
        }
    }
    for (Eigen::Index j = 0; j < k; ++j) {
        const double pj = w(j) / w.sum();
        if (pj <= 0.0) {
            fv.segment(j * d, d).setZero();
            fv.segment((k + j) * d, d).setZero();
            continue;
        }
        fv.segment(j * d, d) /= static_cast<double>(n) * std::sqrt(pj);
        fv.segment((k + j) * d, d) /= static_cast<double>(n) * std::sqrt(2.0 * pj);
    }
    return fv;
}

/// Fisher vector with signed square root and global L2 normalization.
template <typename Scalar, typename Derived>
FeatureVector encode_fisher(const GmmModel<Scalar>& gmm, const Eigen::MatrixBase<Derived>& x) {
    Vector<double> v = signed_sqrt(fisher_raw(gmm, x));
    l2_normalize_inplace(v);
    return {v.template cast<float>(), FeatureKind::Fisher, {}};
}

} // namespace texbench
