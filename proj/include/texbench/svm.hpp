#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "texbench/error.hpp"
#include "texbench/folds.hpp"
#include "texbench/matrix.hpp"
#include "texbench/random.hpp"

namespace texbench {

/// L2-regularized L1-hinge linear SVM; the bias is an extra feature fixed at
/// 1 and is regularized along with w.
struct SvmTrainConfig {
    double C = 1.0;
    double tolerance = 1e-3; ///< max |projected gradient| over an epoch
    int max_iter = 1000;     ///< epochs
    std::uint64_t seed = 1;

    void validate() const {
        if (!(C > 0.0)) throw Error("SVM C must be positive");
        if (!(tolerance > 0.0)) throw Error("SVM tolerance must be positive");
        if (max_iter < 1) throw Error("SVM max_iter must be >= 1");
    }
};

struct BinarySvm {
    Vector<double> w;
    double b = 0.0;

    template <typename Derived>
    double decision(const Eigen::MatrixBase<Derived>& x) const {
        return w.dot(x.template cast<double>().reshaped()) + b;
    }
};

/// Optional solver instrumentation.
struct SvmTrace {
    std::vector<double> dual_objective; ///< after every coordinate update
    int epochs = 0;
    double final_violation = 0.0;
};

/// One-vs-rest multiclass model: row c of `weights` with `bias(c)` scores class c.
struct LinearSvmModel {
    RowMatrix<double> weights;
    Vector<double> bias;

    Eigen::Index classes() const noexcept { return weights.rows(); }
    Eigen::Index dim() const noexcept { return weights.cols(); }

    template <typename Derived>
    Vector<double> scores(const Eigen::MatrixBase<Derived>& x) const {
        if (x.size() != dim())
            throw ShapeError("feature of dimension " + std::to_string(x.size()) + " against SVM of dimension " +
                             std::to_string(dim()));
        return weights * x.template cast<double>().reshaped() + bias;
    }
};

/// 1/2 (|w|^2 + b^2) + C sum_i max(0, 1 - y_i (w.x_i + b)).
template <typename Derived>
double svm_primal_objective(const BinarySvm& m, const Eigen::MatrixBase<Derived>& x, std::span<const int> y,
                            double C) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        loss += std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * m.decision(x.row(i)));
    return 0.5 * (m.w.squaredNorm() + m.b * m.b) + C * loss;
}

namespace detail {

/// Gram matrix of the bias-augmented features, X X^T + 1.
template <typename Derived>
RowMatrix<double> augmented_gram(const Eigen::MatrixBase<Derived>& x) {
    const RowMatrix<double> xd = x.template cast<double>();
    RowMatrix<double> k = xd * xd.transpose();
    k.array() += 1.0;
    return k;
}

inline void check_binary_labels(std::span<const int> y, Eigen::Index n) {
    if (static_cast<Eigen::Index>(y.size()) != n) throw ShapeError("label count does not match sample count");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw Error("binary SVM labels must be +1 or -1");
    }
    if (!pos || !neg) throw Error("binary SVM training needs both classes present");
}

/// Dual coordinate descent on the box-constrained dual, using the augmented
/// Gram matrix. Returns alpha.
inline Vector<double> dual_cd(const RowMatrix<double>& gram, std::span<const int> y, const SvmTrainConfig& cfg,
                              SvmTrace* trace) {
    const Eigen::Index n = gram.rows();
    Vector<double> alpha = Vector<double>::Zero(n);
    Vector<double> f = Vector<double>::Zero(n); // f_i = sum_j alpha_j y_j K(j, i)
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    SplitMix64 rng(cfg.seed);

    auto dual_value = [&] {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += alpha(i) - 0.5 * alpha(i) * y[static_cast<std::size_t>(i)] * f(i);
        return s;
    };
    if (trace) {
        trace->dual_objective.assign(1, 0.0);
        trace->epochs = 0;
    }

    double violation = 0.0;
    for (int epoch = 0; epoch < cfg.max_iter; ++epoch) {
        shuffle(order, rng);
        violation = 0.0;
        for (Eigen::Index i : order) {
            const double yi = y[static_cast<std::size_t>(i)];
            const double g = yi * f(i) - 1.0;
            double pg = g;
            if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
            else if (alpha(i) >= cfg.C) pg = std::max(g, 0.0);
            violation = std::max(violation, std::abs(pg));
            if (pg == 0.0) continue;
            const double old = alpha(i);
            alpha(i) = std::clamp(old - g / gram(i, i), 0.0, cfg.C);
            const double delta = (alpha(i) - old) * yi;
            if (delta != 0.0) f += delta * gram.col(i);
            if (trace) trace->dual_objective.push_back(dual_value());
        }
        if (trace) trace->epochs = epoch + 1;
        if (violation < cfg.tolerance) break;
    }
    if (trace) trace->final_violation = violation;
    return alpha;
}

template <typename Derived>
BinarySvm primal_from_dual(const Eigen::MatrixBase<Derived>& x, std::span<const int> y, const Vector<double>& alpha) {
    BinarySvm m;
    m.w = Vector<double>::Zero(x.cols());
    m.b = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double c = alpha(i) * y[static_cast<std::size_t>(i)];
        if (c == 0.0) continue;
        m.w += c * x.row(i).template cast<double>().transpose();
        m.b += c;
    }
    return m;
}

template <typename Derived>
LinearSvmModel train_ovr_gram(const Eigen::MatrixBase<Derived>& x, std::span<const int> labels,
                              const RowMatrix<double>& gram, const SvmTrainConfig& cfg) {
    cfg.validate();
    int classes = 0;
    for (int l : labels) {
        if (l < 0) throw Error("class labels must be non-negative");
        classes = std::max(classes, l + 1);
    }
    std::vector<int> present(static_cast<std::size_t>(classes), 0);
    for (int l : labels) present[static_cast<std::size_t>(l)] = 1;
    if (std::count(present.begin(), present.end(), 1) < 2)
        throw Error("one-vs-rest training needs at least two classes present");

    LinearSvmModel model;
    model.weights = RowMatrix<double>::Zero(classes, x.cols());
    model.bias = Vector<double>::Zero(classes);
    std::vector<int> y(labels.size());
    for (int c = 0; c < classes; ++c) {
        if (!present[static_cast<std::size_t>(c)]) {
            // Absent class: never predicted unless every score is -inf.
            model.bias(c) = -std::numeric_limits<double>::infinity();
            continue;
        }
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == c ? 1 : -1;
        const BinarySvm m = primal_from_dual(x, y, dual_cd(gram, y, cfg, nullptr));
        model.weights.row(c) = m.w.transpose();
        model.bias(c) = m.b;
    }
    return model;
}

} // namespace detail

/// Trains on rows of `x` with labels in {-1, +1}.
template <typename Derived>
BinarySvm train_binary(const Eigen::MatrixBase<Derived>& x, std::span<const int> y, const SvmTrainConfig& cfg,
                       SvmTrace* trace = nullptr) {
    cfg.validate();
    if (x.rows() < 2) throw Error("binary SVM training needs at least two samples");
    detail::check_binary_labels(y, x.rows());
    require_finite(x, "SVM features");
    return detail::primal_from_dual(x, y, detail::dual_cd(detail::augmented_gram(x), y, cfg, trace));
}

/// One binary problem per class (class vs rest), same config and seed.
template <typename Derived>
LinearSvmModel train_ovr(const Eigen::MatrixBase<Derived>& x, std::span<const int> labels, const SvmTrainConfig& cfg) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows())
        throw ShapeError("label count does not match sample count");
    require_finite(x, "SVM features");
    return detail::train_ovr_gram(x, labels, detail::augmented_gram(x), cfg);
}

/// argmax_c (w_c . x + b_c), lowest class index on ties.
template <typename Derived>
int predict(const LinearSvmModel& model, const Eigen::MatrixBase<Derived>& x) {
    const Vector<double> s = model.scores(x);
    int best = 0;
    for (Eigen::Index c = 1; c < s.size(); ++c)
        if (s(c) > s(best)) best = static_cast<int>(c);
    return best;
}

/// Fraction of rows whose prediction equals the label.
template <typename Derived>
double accuracy(const LinearSvmModel& model, const Eigen::MatrixBase<Derived>& x, std::span<const int> labels) {
    if (x.rows() == 0) return 0.0;
    std::size_t hit = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (predict(model, x.row(i)) == labels[static_cast<std::size_t>(i)]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(x.rows());
}

struct CSelection {
    double C = 1.0;
    std::vector<double> mean_accuracy; ///< per grid value, grid order
};

namespace detail {

template <typename Derived>
CSelection select_C_gram(const Eigen::MatrixBase<Derived>& x, std::span<const int> labels,
                         const RowMatrix<double>& gram, std::span<const double> grid, const SvmTrainConfig& base,
                         std::uint64_t seed) {
    if (grid.empty()) throw Error("C grid is empty");
    const FoldPlan plan = stratified_kfold(labels, 3, seed);
    CSelection sel;
    double best = -1.0;
    for (double C : grid) {
        SvmTrainConfig cfg = base;
        cfg.C = C;
        double sum = 0.0;
        for (int f = 0; f < plan.k; ++f) {
            const auto tr = plan.train_indices(f);
            const auto te = plan.test_indices(f);
            std::vector<int> ytr, yte;
            for (auto i : tr) ytr.push_back(labels[i]);
            for (auto i : te) yte.push_back(labels[i]);
            const RowMatrix<double> sub = gram(tr, tr);
            const LinearSvmModel m = train_ovr_gram(x(tr, Eigen::all), ytr, sub, cfg);
            sum += accuracy(m, x(te, Eigen::all), yte);
        }
        const double mean = sum / plan.k;
        sel.mean_accuracy.push_back(mean);
        if (mean > best || (mean == best && C < sel.C)) {
            best = mean;
            sel.C = C;
        }
    }
    return sel;
}

} // namespace detail

/// C with the best stratified 3-fold accuracy on (x, labels); ties go to the smaller C.
template <typename Derived>
CSelection select_C(const Eigen::MatrixBase<Derived>& x, std::span<const int> labels, std::span<const double> grid,
                    const SvmTrainConfig& base, std::uint64_t seed) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows())
        throw ShapeError("label count does not match sample count");
    require_finite(x, "SVM features");
    return detail::select_C_gram(x, labels, detail::augmented_gram(x), grid, base, seed);
}

/// select_C followed by train_ovr on all rows with the chosen C.
template <typename Derived>
std::pair<LinearSvmModel, CSelection> fit_svm(const Eigen::MatrixBase<Derived>& x, std::span<const int> labels,
                                              std::span<const double> grid, const SvmTrainConfig& base,
                                              std::uint64_t seed) {
    require_finite(x, "SVM features");
    const RowMatrix<double> gram = detail::augmented_gram(x);
    CSelection sel = detail::select_C_gram(x, labels, gram, grid, base, seed);
    SvmTrainConfig cfg = base;
    cfg.C = sel.C;
    return {detail::train_ovr_gram(x, labels, gram, cfg), std::move(sel)};
}

} // namespace texbench
