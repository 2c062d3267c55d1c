#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "texbench/error.hpp"
#include "texbench/matrix.hpp"
#include "texbench/random.hpp"

namespace texbench {

/// k visual words of dimension d, one per row.
template <typename Scalar>
struct Codebook {
    RowMatrix<Scalar> centroids;

    Eigen::Index words() const noexcept { return centroids.rows(); }
    Eigen::Index dim() const noexcept { return centroids.cols(); }
};

/// Diagonal-covariance Gaussian mixture.
template <typename Scalar>
struct GmmModel {
    Vector<Scalar> weights;      // k
    RowMatrix<Scalar> means;     // k x d
    RowMatrix<Scalar> variances; // k x d

    Eigen::Index components() const noexcept { return means.rows(); }
    Eigen::Index dim() const noexcept { return means.cols(); }
};

struct KMeansOptions {
    int k = 64;
    std::uint64_t seed = 1;
    int max_iter = 100;
    double rel_tol = 1e-5;
};

struct GmmOptions {
    int k = 16;
    std::uint64_t seed = 1;
    int max_iter = 100;
    double rel_tol = 1e-5;
    double variance_floor = 1e-4;
};

namespace detail {

template <typename A, typename B>
double squared_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < a.size(); ++r) {
        const double diff = static_cast<double>(a(r)) - static_cast<double>(b(r));
        s += diff * diff;
    }
    return s;
}

/// Exact nearest centroid (lowest index on ties) for every row of `x`.
/// Candidates come from a GEMM expansion of the squared distance; every
/// candidate within the expansion's rounding band is re-checked exactly.
template <typename Scalar, typename Derived>
std::vector<Eigen::Index> nearest_rows(const RowMatrix<Scalar>& centroids,
                                       const Eigen::MatrixBase<Derived>& x,
                                       std::vector<double>* distances = nullptr) {
    using Real = typename Derived::Scalar;
    const Eigen::Index n = x.rows();
    const Eigen::Index k = centroids.rows();
    std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
    if (distances) distances->assign(static_cast<std::size_t>(n), 0.0);
    if (n == 0) return out;

    const RowMatrix<Real> c = centroids.template cast<Real>();
    const Vector<Real> c_norm = c.rowwise().squaredNorm();
    const Real c_norm_max = c_norm.maxCoeff();
    const Real band_scale = Real(64) * std::numeric_limits<Real>::epsilon() * Real(c.cols() + 4);

    constexpr Eigen::Index kChunk = 2048;
    RowMatrix<Real> dots;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index rows = std::min(kChunk, n - start);
        const auto block = x.middleRows(start, rows);
        dots.noalias() = block * c.transpose();
        for (Eigen::Index i = 0; i < rows; ++i) {
            const Real x_norm = block.row(i).squaredNorm();
            Real best = std::numeric_limits<Real>::infinity();
            for (Eigen::Index j = 0; j < k; ++j) best = std::min(best, c_norm(j) - Real(2) * dots(i, j));
            const Real band = band_scale * (x_norm + c_norm_max);
            Eigen::Index arg = -1;
            double arg_dist = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < k; ++j) {
                if (c_norm(j) - Real(2) * dots(i, j) > best + band) continue;
                const double d = squared_distance(block.row(i), centroids.row(j));
                if (d < arg_dist) {
                    arg_dist = d;
                    arg = j;
                }
            }
            out[static_cast<std::size_t>(start + i)] = arg;
            if (distances) (*distances)[static_cast<std::size_t>(start + i)] = arg_dist;
        }
    }
    return out;
}

template <typename Derived>
RowMatrix<double> kmeanspp_init(const Eigen::MatrixBase<Derived>& x, int k, SplitMix64& rng) {
    const Eigen::Index n = x.rows();
    RowMatrix<double> centres(k, x.cols());
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);

    auto take = [&](Eigen::Index idx, int slot) {
        chosen[static_cast<std::size_t>(idx)] = 1;
        centres.row(slot) = x.row(idx).template cast<double>();
        for (Eigen::Index i = 0; i < n; ++i)
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], squared_distance(x.row(i), centres.row(slot)));
    };

    take(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))), 0);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double v = d2[static_cast<std::size_t>(i)];
                if (v <= 0.0) continue;
                acc += v;
                pick = i;
                if (acc > target) break;
            }
        } else {
            // Fewer distinct points than k: fall back to an unused row.
            std::vector<Eigen::Index> unused;
            for (Eigen::Index i = 0; i < n; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) unused.push_back(i);
            pick = unused[static_cast<std::size_t>(rng.below(unused.size()))];
        }
        take(pick, c);
    }
    return centres;
}

} // namespace detail

/// Index of the nearest centroid by squared Euclidean distance, lowest index on ties.
template <typename Scalar, typename Derived>
Eigen::Index assign_nearest(const Codebook<Scalar>& codebook, const Eigen::MatrixBase<Derived>& descriptor) {
    if (descriptor.size() != codebook.dim())
        throw ShapeError("descriptor of dimension " + std::to_string(descriptor.size()) +
                         " against codebook of dimension " + std::to_string(codebook.dim()));
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < codebook.words(); ++j) {
        const double d = detail::squared_distance(descriptor.reshaped(), codebook.centroids.row(j).transpose());
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

/// Nearest word for every row; identical to calling assign_nearest per row.
template <typename Scalar, typename Derived>
std::vector<Eigen::Index> assign_all(const Codebook<Scalar>& codebook, const Eigen::MatrixBase<Derived>& x) {
    if (x.rows() > 0 && x.cols() != codebook.dim())
        throw ShapeError("descriptors of dimension " + std::to_string(x.cols()) +
                         " against codebook of dimension " + std::to_string(codebook.dim()));
    return detail::nearest_rows(codebook.centroids, x);
}

/// Sum of squared distances from each row to its nearest centroid.
template <typename Scalar, typename Derived>
double kmeans_objective(const Codebook<Scalar>& codebook, const Eigen::MatrixBase<Derived>& x) {
    std::vector<double> d;
    detail::nearest_rows(codebook.centroids, x, &d);
    double s = 0.0;
    for (double v : d) s += v;
    return s;
}

/// k-means++ seeding followed by Lloyd iterations. `objective_trace`, when
/// given, receives the objective after the initial assignment and after
/// every iteration; the sequence never increases.
template <typename Derived>
Codebook<typename Derived::Scalar> kmeans_fit(const Eigen::MatrixBase<Derived>& x, const KMeansOptions& opt,
                                              std::vector<double>* objective_trace = nullptr) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (opt.k < 1) throw Error("kmeans needs k >= 1");
    if (n < opt.k)
        throw Error("kmeans needs at least k points (n = " + std::to_string(n) +
                    ", k = " + std::to_string(opt.k) + ")");
    require_finite(x, "kmeans input");

    SplitMix64 rng(opt.seed);
    RowMatrix<double> centres = detail::kmeanspp_init(x, opt.k, rng);

    std::vector<double> dist;
    auto assign = [&] { return detail::nearest_rows(RowMatrix<Scalar>(centres.template cast<Scalar>()), x, &dist); };
    // Distances are measured against the Scalar-rounded centres that are returned.
    auto objective = [&] {
        double s = 0.0;
        for (double v : dist) s += v;
        return s;
    };

    std::vector<Eigen::Index> labels = assign();
    double prev = objective();
    if (objective_trace) objective_trace->assign(1, prev);

    std::vector<Eigen::Index> counts(static_cast<std::size_t>(opt.k));
    for (int iter = 0; iter < opt.max_iter && prev > 0.0; ++iter) {
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index l : labels) ++counts[static_cast<std::size_t>(l)];

        // Reseed empty clusters with the point farthest from its centre.
        for (int j = 0; j < opt.k; ++j) {
            if (counts[static_cast<std::size_t>(j)] != 0) continue;
            Eigen::Index far = -1;
            double far_d = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto li = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
                if (counts[li] > 1 && dist[static_cast<std::size_t>(i)] > far_d) {
                    far_d = dist[static_cast<std::size_t>(i)];
                    far = i;
                }
            }
            if (far < 0) continue;
            --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
            labels[static_cast<std::size_t>(far)] = j;
            dist[static_cast<std::size_t>(far)] = 0.0;
            counts[static_cast<std::size_t>(j)] = 1;
        }

        const RowMatrix<double> previous = centres;
        RowMatrix<double> sums = RowMatrix<double>::Zero(opt.k, d);
        for (Eigen::Index i = 0; i < n; ++i)
            sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i).template cast<double>();
        for (int j = 0; j < opt.k; ++j)
            if (counts[static_cast<std::size_t>(j)] > 0)
                centres.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);

        const std::vector<double> previous_dist = dist;
        labels = assign();
        const double cur = objective();
        if (cur > prev) {
            // Rounding the update to Scalar can undo a converged step; keep the better centres.
            centres = previous;
            dist = previous_dist;
            break;
        }
        if (objective_trace) objective_trace->push_back(cur);
        const bool done = prev - cur < opt.rel_tol * prev;
        prev = cur;
        if (done) break;
    }
    return {centres.template cast<Scalar>()};
}

/// Responsibilities gamma_j(x), computed in log space with max subtraction.
template <typename Scalar, typename Derived>
Vector<double> gmm_posteriors(const GmmModel<Scalar>& gmm, const Eigen::MatrixBase<Derived>& x) {
    if (x.size() != gmm.dim())
        throw ShapeError("descriptor of dimension " + std::to_string(x.size()) +
                         " against GMM of dimension " + std::to_string(gmm.dim()));
    const Eigen::Index k = gmm.components();
    const double log_total = std::log(gmm.weights.template cast<double>().sum());
    Vector<double> logp(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double q = 0.0;
        for (Eigen::Index r = 0; r < gmm.dim(); ++r) {
            const double var = gmm.variances(j, r);
            const double diff = static_cast<double>(x(r)) - gmm.means(j, r);
            q += std::log(2.0 * std::numbers::pi * var) + diff * diff / var;
        }
        logp(j) = std::log(static_cast<double>(gmm.weights(j))) - log_total - 0.5 * q;
    }
    const double m = logp.maxCoeff();
    Vector<double> g = (logp.array() - m).exp();
    return g / g.sum();
}

namespace detail {

/// Log of pi_j N(x_i; mu_j, sigma_j^2) for all rows, n x k, via GEMM.
template <typename Derived>
RowMatrix<double> gmm_log_joint(const Vector<double>& weights, const RowMatrix<double>& means,
                                const RowMatrix<double>& variances, const Eigen::MatrixBase<Derived>& x) {
    const RowMatrix<double> prec = variances.cwiseInverse();
    const RowMatrix<double> mp = means.cwiseProduct(prec);
    Vector<double> constant(means.rows());
    for (Eigen::Index j = 0; j < means.rows(); ++j)
        constant(j) = std::log(weights(j)) -
                      0.5 * ((2.0 * std::numbers::pi * variances.row(j).array()).log().sum() +
                             means.row(j).cwiseProduct(mp.row(j)).sum());
    const RowMatrix<double> xd = x.template cast<double>();
    RowMatrix<double> out = xd.cwiseAbs2() * prec.transpose();
    out *= -0.5;
    out.noalias() += xd * mp.transpose();
    out.rowwise() += constant.transpose();
    return out;
}

/// Row-wise log-sum-exp normalization in place; returns the total log-likelihood.
inline double normalize_rows(RowMatrix<double>& logp) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        const double m = logp.row(i).maxCoeff();
        double s = 0.0;
        for (Eigen::Index j = 0; j < logp.cols(); ++j) {
            // Terms below exp(-600) are dropped so that no subnormal reaches the GEMMs.
            const double t = logp(i, j) - m;
            logp(i, j) = t < -600.0 ? 0.0 : std::exp(t);
            s += logp(i, j);
        }
        auto row = logp.row(i);
        row /= s;
        ll += m + std::log(s);
    }
    return ll;
}

} // namespace detail

/// Total log-likelihood sum_i log sum_j pi_j N(x_i; mu_j, sigma_j^2).
template <typename Scalar, typename Derived>
double gmm_log_likelihood(const GmmModel<Scalar>& gmm, const Eigen::MatrixBase<Derived>& x) {
    RowMatrix<double> lp = detail::gmm_log_joint(Vector<double>(gmm.weights.template cast<double>()),
                                                 RowMatrix<double>(gmm.means.template cast<double>()),
                                                 RowMatrix<double>(gmm.variances.template cast<double>()), x);
    return detail::normalize_rows(lp);
}

/// EM for a diagonal GMM, initialised from kmeans_fit. `loglik_trace`, when
/// given, receives the log-likelihood at initialisation and after each
/// iteration.
template <typename Derived>
GmmModel<typename Derived::Scalar> gmm_fit_em(const Eigen::MatrixBase<Derived>& x, const GmmOptions& opt,
                                              std::vector<double>* loglik_trace = nullptr) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const int k = opt.k;
    if (!(opt.variance_floor > 0.0)) throw Error("GMM variance floor must be positive");
    if (n < k)
        throw Error("GMM fit needs at least k points (n = " + std::to_string(n) + ", k = " + std::to_string(k) + ")");
    require_finite(x, "GMM input");

    KMeansOptions km;
    km.k = k;
    km.seed = opt.seed;
    km.max_iter = opt.max_iter;
    km.rel_tol = opt.rel_tol;
    const Codebook<Scalar> init = kmeans_fit(x, km);
    const auto labels = detail::nearest_rows(init.centroids, x);

    Vector<double> weights = Vector<double>::Zero(k);
    RowMatrix<double> means = init.centroids.template cast<double>();
    RowMatrix<double> variances = RowMatrix<double>::Zero(k, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto j = labels[static_cast<std::size_t>(i)];
        weights(j) += 1.0;
        variances.row(j) += (x.row(i).template cast<double>() - means.row(j)).cwiseAbs2();
    }
    for (int j = 0; j < k; ++j)
        if (weights(j) > 0) variances.row(j) /= weights(j);
    variances = variances.cwiseMax(opt.variance_floor);
    weights /= static_cast<double>(n);

    RowMatrix<double> resp = detail::gmm_log_joint(weights, means, variances, x);
    double prev = detail::normalize_rows(resp);
    if (loglik_trace) loglik_trace->assign(1, prev);

    const RowMatrix<double> xd = x.template cast<double>();
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        const Vector<double> mass = resp.colwise().sum().transpose();
        const RowMatrix<double> first = resp.transpose() * xd;
        const RowMatrix<double> second = resp.transpose() * xd.cwiseAbs2();
        for (int j = 0; j < k; ++j) {
            if (!(mass(j) > 0.0)) {
                weights(j) = 0.0;
                continue;
            }
            weights(j) = mass(j) / static_cast<double>(n);
            means.row(j) = first.row(j) / mass(j);
            variances.row(j) = (second.row(j) / mass(j) - means.row(j).cwiseAbs2()).cwiseMax(opt.variance_floor);
        }
        weights /= weights.sum();

        resp = detail::gmm_log_joint(weights, means, variances, x);
        const double cur = detail::normalize_rows(resp);
        if (loglik_trace) loglik_trace->push_back(cur);
        const bool done = std::abs(cur - prev) < opt.rel_tol * std::abs(prev);
        prev = cur;
        if (done) break;
    }
    return {weights.template cast<Scalar>(), means.template cast<Scalar>(), variances.template cast<Scalar>()};
}

} // namespace texbench
