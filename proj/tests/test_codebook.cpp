#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <numeric>

#include "texbench/codebook.hpp"

using namespace texbench;

namespace {

RowMatrix<double> blobs(const std::vector<std::vector<double>>& centres, int per_blob, double spread,
                        std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto d = static_cast<Eigen::Index>(centres[0].size());
    RowMatrix<double> x(static_cast<Eigen::Index>(centres.size()) * per_blob, d);
    Eigen::Index r = 0;
    for (const auto& c : centres)
        for (int i = 0; i < per_blob; ++i, ++r)
            for (Eigen::Index j = 0; j < d; ++j) x(r, j) = c[static_cast<std::size_t>(j)] + spread * rng.normal();
    return x;
}

std::vector<std::vector<double>> sorted_rows(const RowMatrix<double>& m) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.emplace_back(m.row(i).data(), m.row(i).data() + m.cols());
    std::sort(rows.begin(), rows.end());
    return rows;
}

} // namespace

TEST_CASE("two 1-D points, k = 2") {
    RowMatrix<double> x(2, 1);
    x << 0.0, 10.0;
    std::vector<double> trace;
    const auto cb = kmeans_fit(x, KMeansOptions{2, 1, 100, 1e-5}, &trace);
    CHECK(sorted_rows(cb.centroids) == std::vector<std::vector<double>>{{0.0}, {10.0}});
    CHECK(kmeans_objective(cb, x) == 0.0);
}

TEST_CASE("k = n puts every point on its own centroid") {
    const RowMatrix<double> x = blobs({{0, 0}, {5, 5}}, 4, 1.0, 2);
    const auto cb = kmeans_fit(x, KMeansOptions{8, 3, 100, 1e-5});
    CHECK(kmeans_objective(cb, x) == doctest::Approx(0.0));
    CHECK(sorted_rows(cb.centroids) == sorted_rows(x));
}

TEST_CASE("two separated blobs are recovered") {
    const RowMatrix<double> x = blobs({{0, 0}, {20, 0}}, 20, 1.0, 4);
    const auto cb = kmeans_fit(x, KMeansOptions{2, 5, 100, 1e-8});
    const Eigen::RowVector2d m0 = x.topRows(20).colwise().mean();
    const Eigen::RowVector2d m1 = x.bottomRows(20).colwise().mean();
    const auto c = sorted_rows(cb.centroids);
    CHECK(std::hypot(c[0][0] - m0(0), c[0][1] - m0(1)) < 0.5);
    CHECK(std::hypot(c[1][0] - m1(0), c[1][1] - m1(1)) < 0.5);
    // Brute-force objective with an exhaustive nearest check.
    double brute = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double best = 1e300;
        for (Eigen::Index j = 0; j < 2; ++j) best = std::min(best, (x.row(i) - cb.centroids.row(j)).squaredNorm());
        brute += best;
    }
    CHECK(kmeans_objective(cb, x) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("kmeans input checks") {
    RowMatrix<float> x(3, 2);
    x.setZero();
    CHECK_THROWS_AS(kmeans_fit(x, KMeansOptions{4}), Error);
    x(1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(kmeans_fit(x, KMeansOptions{2}), Error);
}

TEST_CASE("kmeans objective never increases") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SplitMix64 rng(seed);
        RowMatrix<float> x(300, 16);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
        std::vector<double> trace;
        kmeans_fit(x, KMeansOptions{12, seed, 100, 0.0}, &trace);
        REQUIRE(trace.size() >= 2);
        for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
    }
}

TEST_CASE("kmeans is invariant to row order up to centroid order") {
    const RowMatrix<double> x = blobs({{0, 0}, {10, 0}, {0, 10}}, 15, 0.5, 6);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.rows()));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    SplitMix64 rng(1);
    shuffle(perm, rng);
    const RowMatrix<double> y = x(perm, Eigen::all);
    const auto a = kmeans_fit(x, KMeansOptions{3, 9, 100, 1e-10});
    const auto b = kmeans_fit(y, KMeansOptions{3, 9, 100, 1e-10});
    const auto ra = sorted_rows(a.centroids), rb = sorted_rows(b.centroids);
    for (std::size_t i = 0; i < ra.size(); ++i)
        for (std::size_t j = 0; j < ra[i].size(); ++j) CHECK(ra[i][j] == doctest::Approx(rb[i][j]).epsilon(1e-9));
}

TEST_CASE("assign_nearest: exact hits, ties and the linear-scan oracle") {
    Codebook<float> cb;
    cb.centroids.resize(5, 2);
    cb.centroids << 0, 0, 1, 0, 5, 5, -3, 2, 3, 0;
    CHECK(assign_nearest(cb, Eigen::Vector2f(-3, 2)) == 3);
    CHECK(assign_nearest(cb, Eigen::Vector2f(2, 0)) == 1); // equidistant to words 1 and 4
    CHECK_THROWS_AS(assign_nearest(cb, Eigen::Vector3f(0, 0, 0)), ShapeError);

    SplitMix64 rng(8);
    Codebook<float> big;
    big.centroids.resize(40, 6);
    for (Eigen::Index i = 0; i < big.centroids.size(); ++i) big.centroids.data()[i] = static_cast<float>(rng.normal());
    RowMatrix<float> q(500, 6);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = static_cast<float>(rng.normal());
    q.row(0) = big.centroids.row(7);
    const auto all = assign_all(big, q);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Eigen::Index best = 0;
        double best_d = 1e300;
        for (Eigen::Index j = 0; j < big.words(); ++j) {
            double d = 0;
            for (Eigen::Index r = 0; r < 6; ++r) {
                const double t = static_cast<double>(q(i, r)) - big.centroids(j, r);
                d += t * t;
            }
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        CHECK(all[static_cast<std::size_t>(i)] == best);
        CHECK(assign_nearest(big, q.row(i)) == best);
    }
    CHECK(all[0] == 7);
}

TEST_CASE("gmm with one component is the sample mean and variance") {
    const RowMatrix<double> x = blobs({{1, -2, 3}}, 50, 2.0, 10);
    const auto g = gmm_fit_em(x, GmmOptions{1, 1, 100, 1e-8, 1e-4});
    CHECK(g.weights(0) == doctest::Approx(1.0));
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::RowVectorXd var = (x.rowwise() - mean).cwiseAbs2().colwise().mean();
    for (int r = 0; r < 3; ++r) {
        CHECK(g.means(0, r) == doctest::Approx(mean(r)).epsilon(1e-9));
        CHECK(g.variances(0, r) == doctest::Approx(var(r)).epsilon(1e-9));
    }
    RowMatrix<double> flat = RowMatrix<double>::Constant(10, 2, 4.0);
    const auto gf = gmm_fit_em(flat, GmmOptions{1, 1, 10, 1e-8, 0.25});
    CHECK(gf.variances(0, 0) == 0.25);
}

TEST_CASE("gmm recovers blob fractions") {
    SplitMix64 rng(12);
    RowMatrix<double> x(200, 1);
    for (Eigen::Index i = 0; i < 200; ++i) x(i, 0) = (i < 60 ? -10.0 : 10.0) + rng.normal();
    const auto g = gmm_fit_em(x, GmmOptions{2, 3, 100, 1e-8, 1e-4});
    const double w_neg = g.means(0, 0) < 0 ? g.weights(0) : g.weights(1);
    CHECK(std::abs(w_neg - 0.3) < 0.05);
}

TEST_CASE("gmm log-likelihood never decreases") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SplitMix64 rng(seed);
        RowMatrix<float> x(200, 5);
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x.data()[i] = static_cast<float>(rng.normal() + (i % 3 == 0 ? 4.0 : 0.0));
        std::vector<double> trace;
        const auto g = gmm_fit_em(x, GmmOptions{4, seed, 100, 0.0, 1e-4}, &trace);
        REQUIRE(trace.size() >= 2);
        for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-7);
        CHECK(g.weights.sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(g.variances.minCoeff() >= 1e-4F);
    }
}

TEST_CASE("posteriors") {
    GmmModel<double> one{Vector<double>::Ones(1), RowMatrix<double>::Zero(1, 2), RowMatrix<double>::Ones(1, 2)};
    CHECK(gmm_posteriors(one, Eigen::Vector2d(3, 4))(0) == 1.0);

    GmmModel<double> sym{Vector<double>::Constant(2, 0.5), RowMatrix<double>(2, 1), RowMatrix<double>::Ones(2, 1)};
    sym.means << -2, 2;
    const auto g = gmm_posteriors(sym, Vector<double>::Zero(1));
    CHECK(g(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(g(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK_THROWS_AS(gmm_posteriors(sym, Eigen::Vector2d(0, 0)), ShapeError);

    SplitMix64 rng(20);
    for (int t = 0; t < 20; ++t) {
        const int k = 3, d = 3;
        GmmModel<double> m{Vector<double>(k), RowMatrix<double>(k, d), RowMatrix<double>(k, d)};
        for (int j = 0; j < k; ++j) {
            m.weights(j) = rng.uniform(0.1, 1.0);
            for (int r = 0; r < d; ++r) {
                m.means(j, r) = rng.uniform(-1, 1);
                m.variances(j, r) = rng.uniform(0.5, 2.0);
            }
        }
        const Vector<double> x = Vector<double>::NullaryExpr(d, [&] { return rng.uniform(-1, 1); });
        // Direct densities without log space; weights deliberately unnormalized.
        std::vector<double> p(k);
        double total = 0;
        for (int j = 0; j < k; ++j) {
            double dens = m.weights(j);
            for (int r = 0; r < d; ++r)
                dens *= std::exp(-0.5 * std::pow(x(r) - m.means(j, r), 2) / m.variances(j, r)) /
                        std::sqrt(2 * std::numbers::pi * m.variances(j, r));
            p[static_cast<std::size_t>(j)] = dens;
            total += dens;
        }
        const auto post = gmm_posteriors(m, x);
        CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-6));
        for (int j = 0; j < k; ++j) CHECK(post(j) == doctest::Approx(p[static_cast<std::size_t>(j)] / total).epsilon(1e-6));
        GmmModel<double> scaled = m;
        scaled.weights *= 7.5;
        CHECK((gmm_posteriors(scaled, x) - post).cwiseAbs().maxCoeff() < 1e-12);
    }
}
