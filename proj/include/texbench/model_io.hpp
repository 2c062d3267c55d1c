#pragma once

#include <filesystem>
#include <vector>

#include "texbench/codebook.hpp"
#include "texbench/localfeat.hpp"
#include "texbench/svm.hpp"

namespace texbench {

// Binary containers. Every integer is u32 little-endian and every value a
// float32 little-endian, written in the order listed.

/// "DSC1" count dim(=128), then per row: x y scale, dim values.
void write_descriptors(const DescriptorSet& set, const std::filesystem::path& path);
DescriptorSet read_descriptors(const std::filesystem::path& path);

/// "CBK1" k d, then k*d centroid values row-major.
void write_codebook(const Codebook<float>& cb, const std::filesystem::path& path);
Codebook<float> read_codebook(const std::filesystem::path& path);

/// "GMM1" k d, then k weights, k*d means, k*d variances.
void write_gmm(const GmmModel<float>& gmm, const std::filesystem::path& path);
GmmModel<float> read_gmm(const std::filesystem::path& path);

/// Encoded features of a labeled sample set.
struct FeatureMatrix {
    RowMatrix<float> values;
    std::vector<int> labels;
};

/// "FMT1" n dim, n labels, then n*dim values row-major.
void write_features(const FeatureMatrix& fm, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

/// "SVM1" classes dim, then per class: dim weights, bias.
void write_svm(const LinearSvmModel& model, const std::filesystem::path& path);
LinearSvmModel read_svm(const std::filesystem::path& path);

} // namespace texbench
