#include <doctest.h>

#include "texbench/error.hpp"
#include "texbench/localfeat.hpp"
#include "texbench/random.hpp"

using namespace texbench;

namespace {

GrayImage noise_image(int w, int h, std::uint64_t seed) {
    SplitMix64 rng(seed);
    GrayImage g(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g(y, x) = static_cast<float>(rng.uniform(0.0, 255.0));
    return g;
}

ImagePatch gray_patch(const GrayImage& g) {
    ImagePatch p = make_patch(static_cast<int>(g.cols()), static_cast<int>(g.rows()));
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            for (int c = 0; c < 3; ++c) p.at(x, y, c) = static_cast<std::uint8_t>(g(y, x));
    return p;
}

void check_normalized(const SiftVector& d) {
    CHECK(d.minCoeff() >= 0.0F);
    if (d.squaredNorm() == 0.0F) return;
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(d.maxCoeff() <= 0.2F + 1e-5F);
}

} // namespace

TEST_CASE("dense grid counts") {
    DenseSamplingSpec s;
    s.step = 10;
    s.patch_sizes = {16};
    s.boundary_margin = 8;
    CHECK(dense_keypoints(100, 100, s).size() == 81);
    CHECK(dense_keypoints(15, 15, s).empty());
    s.patch_sizes = {16, 12};
    const auto two = dense_keypoints(100, 100, s);
    CHECK(two.size() == 162);
    // Scale-major, then row-major.
    CHECK(two[0] == Keypoint{8, 8, 16});
    CHECK(two[1] == Keypoint{18, 8, 16});
    CHECK(two[9] == Keypoint{8, 18, 16});
    CHECK(two[81].scale == 12);
}

TEST_CASE("sampling spec validation") {
    DenseSamplingSpec s;
    s.step = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.patch_sizes = {4};
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.boundary_margin = 8; // below max(patch_sizes) / 2 = 16
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("luma conversion") {
    const ImagePatch p = make_patch(2, 1, 100, 50, 200);
    const GrayImage g = to_gray(p);
    CHECK(g(0, 1) == doctest::Approx(0.299 * 100 + 0.587 * 50 + 0.114 * 200).epsilon(1e-6));
}

TEST_CASE("constant window gives the zero descriptor") {
    GrayImage g = GrayImage::Constant(40, 40, 77.0F);
    const SiftVector d = sift_descriptor(g, {20, 20, 16});
    CHECK(d.squaredNorm() == 0.0F);
    const DescriptorSet set = extract_dense_sift(make_patch(64, 64, 9, 9, 9), DenseSamplingSpec{});
    CHECK(set.size() > 0);
    CHECK(set.values.squaredNorm() == 0.0F);
}

TEST_CASE("support outside the image is an error") {
    const GrayImage g = noise_image(30, 30, 1);
    CHECK_THROWS_AS(sift_descriptor(g, {5, 15, 16}), Error);
    CHECK_THROWS_AS(sift_descriptor(g, {15, 25, 16}), Error);
    CHECK_NOTHROW(sift_descriptor(g, {8, 8, 16}));
}

TEST_CASE("descriptors are unit length and clamped") {
    const GrayImage g = noise_image(64, 64, 2);
    for (int s : {8, 16, 24, 32}) check_normalized(sift_descriptor(g, {32, 32, s}));
}

TEST_CASE("rotating the image by 90 degrees permutes the descriptor") {
    // Rotated image R(u, v) = G(N-1-v, u). A keypoint (x, y) of G lands on
    // (y, N-x) in R; spatial bin (bx, by) moves to (by, 3-bx) and the gradient
    // angle drops by 90 degrees, two orientation bins.
    const int N = 48;
    GrayImage g(N, N);
    for (int y = 0; y < N; ++y)
        for (int x = 0; x < N; ++x) g(y, x) = x < 21 ? 40.0F : 200.0F; // vertical step edge
    g += noise_image(N, N, 3) * 0.05F;
    GrayImage r(N, N);
    for (int v = 0; v < N; ++v)
        for (int u = 0; u < N; ++u) r(v, u) = g(u, N - 1 - v);

    for (const Keypoint kp : {Keypoint{22, 20, 16}, Keypoint{24, 25, 24}, Keypoint{20, 24, 32}}) {
        const SiftVector a = sift_descriptor(g, kp);
        const SiftVector b = sift_descriptor(r, {kp.y, N - kp.x, kp.scale});
        REQUIRE(a.squaredNorm() > 0.0F);
        for (int by = 0; by < 4; ++by)
            for (int bx = 0; bx < 4; ++bx)
                for (int o = 0; o < 8; ++o) {
                    const int src = (by * 4 + bx) * 8 + o;
                    const int dst = ((3 - bx) * 4 + by) * 8 + (o + 6) % 8;
                    CHECK(b(dst) == doctest::Approx(a(src)).epsilon(1e-4).scale(1.0));
                }
    }
}

TEST_CASE("intensity offset and positive scale leave descriptors unchanged") {
    const GrayImage g = noise_image(40, 40, 4);
    const GrayImage shifted = g.array() + 37.0F;
    const GrayImage scaled = g * 2.5F;
    for (const Keypoint kp : {Keypoint{20, 20, 16}, Keypoint{16, 16, 32}}) {
        const SiftVector a = sift_descriptor(g, kp);
        CHECK((sift_descriptor(shifted, kp) - a).cwiseAbs().maxCoeff() < 1e-4F);
        CHECK((sift_descriptor(scaled, kp) - a).cwiseAbs().maxCoeff() < 1e-4F);
    }
}

TEST_CASE("dense extraction matches per-keypoint descriptors") {
    const GrayImage g = noise_image(70, 55, 5);
    const ImagePatch p = gray_patch(g);
    DenseSamplingSpec s;
    s.step = 7;
    const DescriptorSet set = extract_dense_sift(p, s);
    const auto kps = dense_keypoints(70, 55, s);
    REQUIRE(set.keypoints == kps);
    REQUIRE(set.values.rows() == static_cast<Eigen::Index>(kps.size()));
    const GrayImage gray = to_gray(p);
    for (std::size_t i = 0; i < kps.size(); ++i) {
        const SiftVector d = sift_descriptor(gray, kps[i]);
        CHECK((set.values.row(static_cast<Eigen::Index>(i)).transpose() - d).cwiseAbs().maxCoeff() < 1e-5F);
        check_normalized(d);
    }
    const DescriptorSet again = extract_dense_sift(p, s);
    CHECK(again.values == set.values);
}

TEST_CASE("tiny images yield no descriptors") {
    const DescriptorSet set = extract_dense_sift(make_patch(20, 20), DenseSamplingSpec{});
    CHECK(set.size() == 0);
    CHECK(set.values.cols() == kSiftDim);
}
