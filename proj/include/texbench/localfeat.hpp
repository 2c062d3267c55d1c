#pragma once

#include <vector>

#include <Eigen/Core>

#include "texbench/image.hpp"

namespace texbench {

/// Row-major height x width intensity image.
using GrayImage = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// One descriptor per row.
using DescriptorMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kSiftDim = 128;

struct DenseSamplingSpec {
    int step = 8;
    std::vector<int> patch_sizes{16, 24, 32};
    int boundary_margin = 16;

    void validate() const;
};

/// Grid point (x, y) with a square support of `scale` pixels. The support
/// covers columns [x - scale/2, x - scale/2 + scale) and likewise for rows.
struct Keypoint {
    int x = 0;
    int y = 0;
    int scale = 16;
    bool operator==(const Keypoint&) const = default;
};

using SiftVector = Eigen::Matrix<float, kSiftDim, 1>;

/// Dense descriptors of one image: row i of `values` belongs to keypoints[i].
struct DescriptorSet {
    DescriptorMatrix values{0, kSiftDim};
    std::vector<Keypoint> keypoints;

    Eigen::Index size() const noexcept { return values.rows(); }
};

GrayImage to_gray(const ImagePatch& patch);

/// Scale-major, then row-major grid; empty when nothing fits inside the margin.
std::vector<Keypoint> dense_keypoints(int width, int height, const DenseSamplingSpec& spec);

/// Upright SIFT: 4x4 spatial cells x 8 orientations, trilinear soft binning,
/// Gaussian weighting with sigma = scale/2, L2 / clamp 0.2 / L2 normalization.
/// Throws when the support leaves the image.
SiftVector sift_descriptor(const GrayImage& gray, const Keypoint& keypoint);

DescriptorSet extract_dense_sift(const ImagePatch& patch, const DenseSamplingSpec& spec);

} // namespace texbench
