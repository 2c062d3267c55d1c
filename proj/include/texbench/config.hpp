#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "texbench/dataset.hpp"
#include "texbench/error.hpp"
#include "texbench/harness.hpp"

namespace texbench {

/// A parsed experiment file. Relative paths are already resolved against the
/// directory holding the file.
struct ExperimentConfig {
    std::filesystem::path source;

    std::optional<std::filesystem::path> dataset_dir;
    std::optional<SyntheticSpec> synthetic;
    std::filesystem::path generate_dir; ///< where `generate` writes the synthetic set

    int folds = 10;
    int trials = 10; ///< codebook pipelines; cnn and raw run one trial
    std::uint64_t base_seed = 1;

    std::vector<PipelineSpec> pipelines;

    std::filesystem::path csv;
    std::filesystem::path svg;

    void validate() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Error raised while running one pipeline; what() starts with its label.
class PipelineError : public Error {
public:
    PipelineError(std::string pipeline, const std::string& what)
        : Error("pipeline '" + pipeline + "': " + what), pipeline_(std::move(pipeline)) {}
    const std::string& pipeline() const noexcept { return pipeline_; }

private:
    std::string pipeline_;
};

/// Checks everything that can fail without training: kinds, parameters,
/// arch files, layer names, weight files.
void check_pipeline(const PipelineSpec& spec);

/// The dataset named by the config: loaded from disk or generated in memory.
Dataset experiment_dataset(const ExperimentConfig& config);

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every pipeline in config order. Codebook pipelines use run_trials
/// with config.trials, raw and cnn pipelines a single run of k-fold CV
/// (every cnn layer sharing one split). All pipelines are checked first.
std::vector<ExperimentResult> run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                             const HarnessOptions& options = {}, const ProgressFn& progress = {});

} // namespace texbench
