#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "texbench/cnn/network.hpp"
#include "texbench/codebook.hpp"
#include "texbench/dataset.hpp"
#include "texbench/folds.hpp"
#include "texbench/localfeat.hpp"
#include "texbench/svm.hpp"

namespace texbench {

enum class PipelineKind { Raw, Cnn, Bovw, Vlad, Fisher };

std::string to_string(PipelineKind kind);
PipelineKind pipeline_kind_from_string(const std::string& name);

/// Settings for learning visual words from training descriptors.
struct CodebookTraining {
    std::size_t max_descriptors = 20000; ///< random subset of training descriptors
    int max_iter = 100;
    double rel_tol = 1e-5;
    double variance_floor = 1e-4;
};

/// One bar of an experiment: a feature source plus its classifier settings.
struct PipelineSpec {
    std::string label;
    PipelineKind kind = PipelineKind::Raw;

    int raw_width = 64; ///< raw pixels: resize target
    int raw_height = 64;

    std::filesystem::path arch;    ///< cnn
    std::filesystem::path weights; ///< cnn; empty means init_weights(weights_seed)
    std::uint64_t weights_seed = 1;
    std::vector<std::string> layers;

    int words = 64; ///< bovw/vlad words or fisher components
    DenseSamplingSpec sampling;
    CodebookTraining codebook;

    SvmTrainConfig svm;
    std::vector<double> c_grid{1e-2, 1e-1, 1.0, 10.0, 100.0};

    void validate() const;
    /// `label` if set, otherwise derived from the kind and its parameters.
    std::string display_label() const;
    bool uses_codebook() const { return kind == PipelineKind::Bovw || kind == PipelineKind::Vlad || kind == PipelineKind::Fisher; }
};

struct ExperimentResult {
    std::string label;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    bool std_defined = true; ///< false for a single trial
    std::size_t feature_dim = 0;
    std::vector<double> unit_accuracies; ///< per fold, or per trial for run_trials
    std::vector<std::uint64_t> seeds;
    int folds = 0;
    int trials = 1;
    double wall_time = 0.0;
};

struct HarnessOptions {
    int jobs = 1;              ///< worker threads across folds
    bool record_timing = true; ///< false writes 0 so reruns are byte-identical
};

/// Mean and sample (n - 1) standard deviation; std is 0 for fewer than two values.
std::pair<double, double> mean_and_std(std::span<const double> values);

/// Pipeline with everything that does not depend on a fold split: loaded
/// network, resized patches, dense descriptors. Immutable once built.
class PreparedPipeline {
public:
    PreparedPipeline(PipelineSpec spec, const Dataset& dataset, const HarnessOptions& options = {});

    const PipelineSpec& spec() const noexcept { return spec_; }
    const Dataset& dataset() const noexcept { return *dataset_; }
    const Network* network() const noexcept { return network_.get(); }
    /// Taps produced per patch (layers for cnn, otherwise one).
    std::vector<std::string> taps() const;
    int input_width() const noexcept { return width_; }
    int input_height() const noexcept { return height_; }

    const std::vector<ImagePatch>& resized() const noexcept { return resized_; }
    const std::vector<DescriptorSet>& descriptors() const noexcept { return descriptors_; }

private:
    PipelineSpec spec_;
    const Dataset* dataset_;
    std::shared_ptr<const Network> network_;
    int width_ = 0, height_ = 0;
    std::vector<ImagePatch> resized_;
    std::vector<DescriptorSet> descriptors_;
};

/// Data-dependent feature model of one fold; fitted on training indices only.
struct FittedEncoder {
    std::array<float, 3> mean_rgb{0.0F, 0.0F, 0.0F};
    std::optional<Codebook<float>> codebook;
    std::optional<GmmModel<float>> gmm;
};

FittedEncoder fit_encoder(const PreparedPipeline& pipeline, std::span<const std::size_t> train, std::uint64_t seed);

/// Features for `indices`, one matrix per tap.
std::vector<RowMatrix<float>> encode_samples(const PreparedPipeline& pipeline, const FittedEncoder& encoder,
                                             std::span<const std::size_t> indices);

/// Everything fitted inside one outer fold.
struct FoldFit {
    FittedEncoder encoder;
    std::vector<CSelection> selection; ///< per tap
    std::vector<LinearSvmModel> svm;   ///< per tap
};

/// Fits the encoder, selects C by inner 3-fold CV and trains the final
/// SVM, seeing only rows in `train`.
FoldFit fit_fold(const PreparedPipeline& pipeline, std::span<const std::size_t> train, std::uint64_t seed);

/// Outer k-fold CV of a prepared pipeline; one result per tap.
std::vector<ExperimentResult> cross_validate(const PreparedPipeline& pipeline, const FoldPlan& plan,
                                             std::uint64_t seed, const HarnessOptions& options = {});

ExperimentResult run_cv(const PipelineSpec& pipeline, const Dataset& dataset, int k, std::uint64_t seed,
                        const HarnessOptions& options = {});

/// Trial t runs run_cv with seed base_seed + t; aggregates the trial means.
ExperimentResult run_trials(const PipelineSpec& pipeline, const Dataset& dataset, int trials, int k,
                            std::uint64_t base_seed, const HarnessOptions& options = {});

/// One run_cv per layer sharing a fold split and a single forward pass per
/// image per fold. Unknown layers fail before any computation.
std::vector<ExperimentResult> layer_sweep(const std::filesystem::path& arch, const std::filesystem::path& weights,
                                          std::uint64_t weights_seed, const std::vector<std::string>& layer_names,
                                          const Dataset& dataset, int k, std::uint64_t seed,
                                          const PipelineSpec& base = {}, const HarnessOptions& options = {});

} // namespace texbench
