#include "texbench/localfeat.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>

#include "texbench/error.hpp"

namespace texbench {

namespace {

constexpr int kCells = 4;
constexpr int kOrientations = 8;
constexpr float kClamp = 0.2F;

// Gradient magnitude and continuous orientation bin in [0, 8) per pixel.
struct GradientField {
    GrayImage magnitude;
    GrayImage orientation_bin;
};

// Fixed point of repeated "clamp at 0.2, renormalize": the scale t with
// |min(t v, 0.2)| = 1. A single pass can leave entries above 0.2. With fewer
// than 25 nonzero entries no such t exists and one pass is applied.
void clamp_renormalize(SiftVector& v) {
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double c = kClamp;
    const auto nonzero = std::count_if(sorted.begin(), sorted.end(), [](double x) { return x > 0.0; });
    if (sorted.empty() || sorted[0] <= c) return;
    if (static_cast<double>(nonzero) * c * c < 1.0) {
        v = v.cwiseMin(kClamp);
        v /= v.norm();
        return;
    }
    double tail = 0.0; // sum of squares of the unclamped entries
    for (double x : sorted) tail += x * x;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        // Top j entries clamped; the rest scale by t.
        tail -= j ? sorted[j - 1] * sorted[j - 1] : 0.0;
        const double rest = 1.0 - static_cast<double>(j) * c * c;
        if (rest <= 0.0 || tail <= 0.0) break;
        const double t = std::sqrt(rest / tail);
        if (t * sorted[j] <= c * (1.0 + 1e-12)) {
            for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = static_cast<float>(std::min(t * v(i), c));
            return;
        }
    }
    v = v.cwiseMin(kClamp);
    v /= v.norm();
}

void gradient_at(const GrayImage& g, int x, int y, float& mag, float& obin) {
    const int w = static_cast<int>(g.cols());
    const int h = static_cast<int>(g.rows());
    const float gx = 0.5F * (g(y, std::min(x + 1, w - 1)) - g(y, std::max(x - 1, 0)));
    const float gy = 0.5F * (g(std::min(y + 1, h - 1), x) - g(std::max(y - 1, 0), x));
    mag = std::sqrt(gx * gx + gy * gy);
    float theta = std::atan2(gy, gx);
    if (theta < 0.0F) theta += 2.0F * std::numbers::pi_v<float>;
    obin = theta * (kOrientations / (2.0F * std::numbers::pi_v<float>));
    if (obin >= kOrientations) obin -= kOrientations;
}

GradientField gradients(const GrayImage& g) {
    GradientField f{GrayImage(g.rows(), g.cols()), GrayImage(g.rows(), g.cols())};
    for (int y = 0; y < g.rows(); ++y)
        for (int x = 0; x < g.cols(); ++x) gradient_at(g, x, y, f.magnitude(y, x), f.orientation_bin(y, x));
    return f;
}

// Per-offset spatial binning along one axis for a support of `scale` pixels.
struct AxisTap {
    int bin0;
    float frac;
    float offset; // distance from the support centre
};

std::vector<AxisTap> axis_taps(int scale) {
    std::vector<AxisTap> taps(scale);
    const float cell = static_cast<float>(scale) / kCells;
    const float centre = static_cast<float>(scale) / 2.0F - 0.5F;
    for (int i = 0; i < scale; ++i) {
        const float offset = static_cast<float>(i) - centre;
        const float u = offset / cell + (kCells - 1) / 2.0F;
        const float b = std::floor(u);
        taps[i] = {static_cast<int>(b), u - b, offset};
    }
    return taps;
}

void check_support(int width, int height, const Keypoint& kp) {
    const int x0 = kp.x - kp.scale / 2;
    const int y0 = kp.y - kp.scale / 2;
    if (kp.scale < 1 || x0 < 0 || y0 < 0 || x0 + kp.scale > width || y0 + kp.scale > height)
        throw Error("SIFT support of scale " + std::to_string(kp.scale) + " at (" +
                    std::to_string(kp.x) + ", " + std::to_string(kp.y) + ") leaves the " +
                    std::to_string(width) + "x" + std::to_string(height) + " image");
}

template <typename MagFn>
SiftVector accumulate(const Keypoint& kp, const std::vector<AxisTap>& taps, MagFn&& sample) {
    Eigen::Matrix<float, kSiftDim, 1> hist = Eigen::Matrix<float, kSiftDim, 1>::Zero();
    const float sigma = static_cast<float>(kp.scale) / 2.0F;
    const float inv_two_sigma2 = 1.0F / (2.0F * sigma * sigma);
    const int x0 = kp.x - kp.scale / 2;
    const int y0 = kp.y - kp.scale / 2;

    for (int j = 0; j < kp.scale; ++j) {
        const AxisTap& ty = taps[j];
        for (int i = 0; i < kp.scale; ++i) {
            const AxisTap& tx = taps[i];
            float mag, obin;
            sample(x0 + i, y0 + j, mag, obin);
            if (mag == 0.0F) continue;
            const float weight =
                mag * std::exp(-(tx.offset * tx.offset + ty.offset * ty.offset) * inv_two_sigma2);
            const float ob = std::floor(obin);
            const float fo = obin - ob;
            const int o0 = static_cast<int>(ob) % kOrientations;
            const int o1 = (o0 + 1) % kOrientations;
            for (int dy = 0; dy < 2; ++dy) {
                const int by = ty.bin0 + dy;
                if (by < 0 || by >= kCells) continue;
                const float wy = dy ? ty.frac : 1.0F - ty.frac;
                for (int dx = 0; dx < 2; ++dx) {
                    const int bx = tx.bin0 + dx;
                    if (bx < 0 || bx >= kCells) continue;
                    const float wxy = wy * (dx ? tx.frac : 1.0F - tx.frac) * weight;
                    const int base = (by * kCells + bx) * kOrientations;
                    hist[base + o0] += wxy * (1.0F - fo);
                    hist[base + o1] += wxy * fo;
                }
            }
        }
    }

    const float norm = hist.norm();
    if (norm == 0.0F) return hist;
    hist /= norm;
    clamp_renormalize(hist);
    return hist;
}

} // namespace

void DenseSamplingSpec::validate() const {
    if (step < 1) throw Error("dense sampling step must be >= 1");
    if (patch_sizes.empty()) throw Error("dense sampling needs at least one patch size");
    int largest = 0;
    for (int s : patch_sizes) {
        if (s < 8) throw Error("dense sampling patch size must be >= 8");
        largest = std::max(largest, s);
    }
    if (2 * boundary_margin < largest)
        throw Error("dense sampling margin must be at least half the largest patch size");
}

GrayImage to_gray(const ImagePatch& patch) {
    patch.validate();
    GrayImage g(patch.height, patch.width);
    for (int y = 0; y < patch.height; ++y)
        for (int x = 0; x < patch.width; ++x)
            g(y, x) = 0.299F * patch.at(x, y, 0) + 0.587F * patch.at(x, y, 1) + 0.114F * patch.at(x, y, 2);
    return g;
}

std::vector<Keypoint> dense_keypoints(int width, int height, const DenseSamplingSpec& spec) {
    spec.validate();
    std::vector<Keypoint> out;
    for (int scale : spec.patch_sizes)
        for (int y = spec.boundary_margin; y < height - spec.boundary_margin; y += spec.step)
            for (int x = spec.boundary_margin; x < width - spec.boundary_margin; x += spec.step)
                out.push_back({x, y, scale});
    return out;
}

SiftVector sift_descriptor(const GrayImage& gray, const Keypoint& keypoint) {
    check_support(static_cast<int>(gray.cols()), static_cast<int>(gray.rows()), keypoint);
    const auto taps = axis_taps(keypoint.scale);
    return accumulate(keypoint, taps, [&](int x, int y, float& mag, float& obin) {
        gradient_at(gray, x, y, mag, obin);
    });
}

DescriptorSet extract_dense_sift(const ImagePatch& patch, const DenseSamplingSpec& spec) {
    DescriptorSet set;
    set.keypoints = dense_keypoints(patch.width, patch.height, spec);
    set.values.resize(static_cast<Eigen::Index>(set.keypoints.size()), kSiftDim);
    if (set.keypoints.empty()) return set;

    const GrayImage gray = to_gray(patch);
    const GradientField field = gradients(gray);
    int taps_scale = -1;
    std::vector<AxisTap> taps;
    for (std::size_t k = 0; k < set.keypoints.size(); ++k) {
        const Keypoint& kp = set.keypoints[k];
        check_support(patch.width, patch.height, kp);
        if (kp.scale != taps_scale) {
            taps = axis_taps(kp.scale);
            taps_scale = kp.scale;
        }
        set.values.row(static_cast<Eigen::Index>(k)) =
            accumulate(kp, taps, [&](int x, int y, float& mag, float& obin) {
                mag = field.magnitude(y, x);
                obin = field.orientation_bin(y, x);
            }).transpose();
    }
    return set;
}

} // namespace texbench
