#include <doctest.h>

#include <array>
#include <numeric>

#include "oracles.hpp"
#include "texbench/svm.hpp"

using namespace texbench;

namespace {

RowMatrix<double> to_matrix(const std::vector<std::vector<double>>& rows) {
    RowMatrix<double> m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

SvmTrainConfig tight(double C) {
    SvmTrainConfig cfg;
    cfg.C = C;
    cfg.tolerance = 1e-6;
    cfg.max_iter = 100000;
    return cfg;
}

// Gaussian blobs around `centres`, `per` points each, labels 0..k-1.
std::pair<RowMatrix<double>, std::vector<int>> blobs(const std::vector<std::array<double, 2>>& centres, int per,
                                                     double sd, std::uint64_t seed) {
    SplitMix64 rng(seed);
    RowMatrix<double> x(static_cast<Eigen::Index>(centres.size()) * per, 2);
    std::vector<int> y;
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < centres.size(); ++c)
        for (int i = 0; i < per; ++i, ++r) {
            x(r, 0) = centres[c][0] + sd * rng.normal();
            x(r, 1) = centres[c][1] + sd * rng.normal();
            y.push_back(static_cast<int>(c));
        }
    return {x, y};
}

} // namespace

TEST_CASE("two-point problem") {
    RowMatrix<double> x(2, 1);
    x << -1, 1;
    const std::vector<int> y{-1, 1};
    const BinarySvm m = train_binary(x, y, tight(10.0));
    CHECK(std::abs(m.w(0) - 1.0) < 5e-2);
    CHECK(std::abs(m.b) < 5e-2);
}

TEST_CASE("primal objective agrees with the projected-gradient reference") {
    SplitMix64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto inst = oracle::random_svm_instance(rng);
        const RowMatrix<double> x = to_matrix(inst.x);
        const BinarySvm m = train_binary(x, inst.y, tight(inst.C));
        const double got = svm_primal_objective(m, x, inst.y, inst.C);
        const double ref = oracle::svm_reference(inst.x, inst.y, inst.C)[0];
        CAPTURE(t);
        CAPTURE(got);
        CAPTURE(ref);
        CHECK(std::abs(got - ref) <= 1e-3 * ref);
    }
}

TEST_CASE("dual objective never decreases") {
    SplitMix64 rng(12);
    for (int t = 0; t < 10; ++t) {
        const auto inst = oracle::random_svm_instance(rng);
        SvmTrace trace;
        train_binary(to_matrix(inst.x), inst.y, tight(inst.C), &trace);
        REQUIRE(trace.dual_objective.size() >= 2);
        for (std::size_t i = 1; i < trace.dual_objective.size(); ++i)
            CHECK(trace.dual_objective[i] >= trace.dual_objective[i - 1] - 1e-12);
        CHECK(trace.final_violation < 1e-6);
    }
}

TEST_CASE("duplicating every point keeps the decision function") {
    SplitMix64 rng(13);
    const auto inst = oracle::random_svm_instance(rng);
    const RowMatrix<double> x = to_matrix(inst.x);
    RowMatrix<double> xx(2 * x.rows(), x.cols());
    xx << x, x;
    std::vector<int> yy = inst.y;
    yy.insert(yy.end(), inst.y.begin(), inst.y.end());
    // Duplicating doubles the loss weight, so the same optimum needs C / 2.
    const BinarySvm a = train_binary(x, inst.y, tight(inst.C));
    const BinarySvm b = train_binary(xx, yy, tight(inst.C / 2));
    for (double u = -3; u <= 3; u += 0.5) {
        Vector<double> probe = Vector<double>::Constant(x.cols(), u);
        probe(0) = -u / 2;
        CHECK(a.decision(probe) == doctest::Approx(b.decision(probe)).epsilon(1e-3));
    }
}

TEST_CASE("separable set is fitted without training errors") {
    const auto [x, y01] = blobs({{-3, -3}, {3, 3}}, 10, 0.8, 14);
    std::vector<int> y;
    for (int l : y01) y.push_back(l == 0 ? -1 : 1);
    const BinarySvm m = train_binary(x, y, tight(10.0));
    for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(y[static_cast<std::size_t>(i)] * m.decision(x.row(i)) > 0);
}

TEST_CASE("flipped labels negate the decision function") {
    SplitMix64 rng(15);
    for (int t = 0; t < 5; ++t) {
        const auto inst = oracle::random_svm_instance(rng);
        const RowMatrix<double> x = to_matrix(inst.x);
        std::vector<int> flipped;
        for (int v : inst.y) flipped.push_back(-v);
        const BinarySvm a = train_binary(x, inst.y, tight(inst.C));
        const BinarySvm b = train_binary(x, flipped, tight(inst.C));
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            CHECK(a.decision(x.row(i)) == doctest::Approx(-b.decision(x.row(i))).epsilon(1e-3).scale(1.0));
    }
}

TEST_CASE("binary training errors") {
    RowMatrix<double> x(3, 1);
    x << 0, 1, 2;
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{1, 1, 1}, {}), Error);
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{1, -1, 2}, {}), Error);
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{1, -1}, {}), ShapeError);
    x(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{1, -1, 1}, {}), Error);
    SvmTrainConfig bad;
    bad.C = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.C = 1;
    bad.tolerance = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("one-vs-rest with two classes matches the binary model") {
    SplitMix64 rng(16);
    const auto inst = oracle::random_svm_instance(rng);
    const RowMatrix<double> x = to_matrix(inst.x);
    std::vector<int> labels;
    for (int v : inst.y) labels.push_back(v > 0 ? 1 : 0);
    const BinarySvm bin = train_binary(x, inst.y, tight(inst.C));
    const LinearSvmModel ovr = train_ovr(x, labels, tight(inst.C));
    REQUIRE(ovr.classes() == 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = bin.decision(x.row(i));
        if (std::abs(d) < 1e-6) continue;
        CHECK(predict(ovr, x.row(i)) == (d > 0 ? 1 : 0));
    }
}

TEST_CASE("three blobs are separated and label order does not matter") {
    const auto [x, y] = blobs({{0, 4}, {-4, -2}, {4, -2}}, 15, 0.7, 17);
    const LinearSvmModel m = train_ovr(x, y, tight(1.0));
    CHECK(accuracy(m, x, y) == 1.0);

    const int remap[] = {2, 0, 1};
    std::vector<int> permuted;
    for (int l : y) permuted.push_back(remap[l]);
    const LinearSvmModel p = train_ovr(x, permuted, tight(1.0));
    SplitMix64 rng(18);
    for (int t = 0; t < 50; ++t) {
        Vector<double> probe(2);
        probe << rng.uniform(-6, 6), rng.uniform(-6, 6);
        CHECK(remap[predict(m, probe)] == predict(p, probe));
    }
}

TEST_CASE("predict: argmax, ties and scaling") {
    LinearSvmModel m;
    m.weights = RowMatrix<double>::Zero(3, 2);
    m.bias = Vector<double>::Zero(3);
    Vector<double> x(2);
    x << 1, 2;
    CHECK(predict(m, x) == 0);
    m.weights.row(2) << 1, 1;
    m.weights.row(1) << 0, 1;
    CHECK(predict(m, x) == 2);
    SplitMix64 rng(19);
    for (int t = 0; t < 20; ++t) {
        for (Eigen::Index i = 0; i < m.weights.size(); ++i) m.weights.data()[i] = rng.uniform(-1, 1);
        for (Eigen::Index c = 0; c < 3; ++c) m.bias(c) = rng.uniform(-1, 1);
        LinearSvmModel scaled = m;
        const double s = rng.uniform(0.01, 100);
        scaled.weights *= s;
        scaled.bias *= s;
        CHECK(predict(m, x) == predict(scaled, x));
    }
    CHECK_THROWS_AS(predict(m, Vector<double>::Zero(3)), ShapeError);
}

TEST_CASE("select_C") {
    const auto [x, y] = blobs({{-3, 0}, {3, 0}, {0, 5}}, 9, 0.6, 20);
    const std::vector<double> one{3.5};
    CHECK(select_C(x, y, one, {}, 1).C == 3.5);

    const std::vector<double> grid{0.01, 1, 100};
    const CSelection sel = select_C(x, y, grid, {}, 2);
    REQUIRE(sel.mean_accuracy.size() == 3);
    const auto chosen = std::find(grid.begin(), grid.end(), sel.C) - grid.begin();
    for (double a : sel.mean_accuracy) CHECK(sel.mean_accuracy[static_cast<std::size_t>(chosen)] >= a);
    // Ties go to the smaller C.
    for (std::size_t i = 0; i < static_cast<std::size_t>(chosen); ++i) CHECK(sel.mean_accuracy[i] < sel.mean_accuracy[static_cast<std::size_t>(chosen)]);
    CHECK(select_C(x, y, grid, {}, 2).C == sel.C);

    std::vector<int> sparse = y;
    sparse.back() = 3; // a class with a single sample
    CHECK_THROWS_AS(select_C(x, sparse, grid, {}, 1), Error);
    CHECK_THROWS_AS(select_C(x, y, std::vector<double>{}, {}, 1), Error);
}
