#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "texbench/cnn/tensor.hpp"
#include "texbench/image.hpp"

namespace texbench {

struct Dataset {
    std::vector<ImagePatch> patches;
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return patches.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }
    std::vector<int> labels() const;

    /// Labels covered by class_names, ids unique, buffers consistent.
    void validate() const;
};

enum class TextureFamily { OrientedGrating, Checker, BlobNoise };

std::string to_string(TextureFamily family);
TextureFamily texture_family_from_string(const std::string& name);

/// Per-class texture parameters. Spatial scales are expressed as cycles (or
/// blobs) across the patch's shorter side so that a resized patch keeps its
/// pattern visible.
struct TextureParams {
    TextureFamily family = TextureFamily::OrientedGrating;
    double cycles_min = 6.0;        ///< pattern repetitions across the patch
    double cycles_max = 10.0;
    double orientation_deg = 0.0;   ///< grating/checker base orientation
    double orientation_jitter_deg = 180.0;
    double contrast = 60.0;         ///< amplitude in intensity units
    std::array<double, 3> base_rgb{140.0, 100.0, 110.0};
};

struct SyntheticSpec {
    int num_classes = 3;
    int patches_per_class = 30;
    int min_px = 150;
    int max_px = 600;
    /// One entry per class; missing entries cycle through the three families.
    std::vector<TextureParams> classes;
    double noise_sigma = 8.0;
    std::uint64_t seed = 1;

    void validate() const;
    TextureParams params_for(int label) const;
};

struct PreprocessSpec {
    int target_width = 227;
    int target_height = 227;
    std::array<float, 3> mean_rgb{0.0F, 0.0F, 0.0F};

    void validate() const;
};

/// Loads `<root>/<class>/<image>`; classes and files sorted lexicographically.
Dataset load_dataset(const std::filesystem::path& root);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Bilinear resampling, half-pixel-centre convention, aspect ratio not kept.
ImagePatch resize_bilinear(const ImagePatch& patch, int target_width, int target_height);

/// Resize, convert to float, subtract mean_rgb. Result shape [3, H, W].
Tensor preprocess(const ImagePatch& patch, const PreprocessSpec& spec);

std::array<float, 3> compute_mean_rgb(std::span<const ImagePatch> patches, int target_width,
                                      int target_height);
std::array<float, 3> compute_mean_rgb(const Dataset& dataset, std::span<const std::size_t> indices,
                                      int target_width, int target_height);

struct SizeHistogram {
    int bin_width = 1;
    /// counts[class][bin]; bin b covers max(w,h) in [b*bin_width, (b+1)*bin_width).
    std::vector<std::vector<int>> counts;
};

SizeHistogram size_histogram(const Dataset& dataset, int bin_width);

} // namespace texbench
