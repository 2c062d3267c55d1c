#include "texbench/harness.hpp"

#include <chrono>
#include <cmath>

#include "texbench/encode.hpp"
#include "texbench/error.hpp"
#include "texbench/parallel.hpp"

namespace texbench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Stream ids for seeds derived inside a fold.
enum : std::uint64_t { kCodebookStream = 1, kSampleStream = 2, kSelectStream = 3, kSvmStream = 4 };

std::uint64_t fold_seed(std::uint64_t seed, std::uint64_t stream) { return SplitMix64::derive(seed, stream); }

} // namespace

std::string to_string(PipelineKind kind) {
    switch (kind) {
    case PipelineKind::Raw: return "raw";
    case PipelineKind::Cnn: return "cnn";
    case PipelineKind::Bovw: return "bovw";
    case PipelineKind::Vlad: return "vlad";
    case PipelineKind::Fisher: return "fisher";
    }
    return "?";
}

PipelineKind pipeline_kind_from_string(const std::string& name) {
    if (name == "raw" || name == "raw-pixels") return PipelineKind::Raw;
    if (name == "cnn" || name == "cnn-layer") return PipelineKind::Cnn;
    if (name == "bovw") return PipelineKind::Bovw;
    if (name == "vlad") return PipelineKind::Vlad;
    if (name == "fisher") return PipelineKind::Fisher;
    throw Error("unknown pipeline kind '" + name + "'");
}

void PipelineSpec::validate() const {
    const std::string who = "pipeline '" + display_label() + "': ";
    switch (kind) {
    case PipelineKind::Raw:
        if (raw_width < 8 || raw_height < 8) throw Error(who + "raw size must be at least 8x8");
        break;
    case PipelineKind::Cnn:
        if (arch.empty()) throw Error(who + "cnn pipeline needs an arch file");
        if (layers.empty()) throw Error(who + "cnn pipeline needs at least one layer");
        break;
    case PipelineKind::Bovw:
    case PipelineKind::Vlad:
    case PipelineKind::Fisher:
        if (words < 1) throw Error(who + "word count must be positive");
        if (codebook.max_descriptors < static_cast<std::size_t>(words))
            throw Error(who + "codebook sample must hold at least one descriptor per word");
        sampling.validate();
        break;
    }
    if (c_grid.empty()) throw Error(who + "C grid is empty");
    for (double c : c_grid)
        if (!(c > 0.0)) throw Error(who + "C grid values must be positive");
    svm.validate();
}

std::string PipelineSpec::display_label() const {
    if (!label.empty()) return label;
    switch (kind) {
    case PipelineKind::Raw: return "raw" + std::to_string(raw_width) + "x" + std::to_string(raw_height);
    case PipelineKind::Cnn: {
        const std::string net = arch.stem().string();
        return layers.size() == 1 ? net + ":" + layers[0] : net;
    }
    default: return to_string(kind) + std::to_string(words);
    }
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

PreparedPipeline::PreparedPipeline(PipelineSpec spec, const Dataset& dataset, const HarnessOptions& options)
    : spec_(std::move(spec)), dataset_(&dataset) {
    spec_.validate();
    dataset.validate();
    if (dataset.size() == 0) throw Error("dataset is empty");
    const std::size_t n = dataset.size();

    if (spec_.kind == PipelineKind::Cnn) {
        auto net = std::make_shared<Network>();
        net->graph = load_arch(spec_.arch);
        net->weights = spec_.weights.empty() ? init_weights(net->graph, spec_.weights_seed) : read_weights(spec_.weights);
        validate_weights(net->graph, net->weights);
        for (const auto& layer : spec_.layers) net->graph.index_of(layer);
        const Shape& in = net->graph.input_shape;
        if (in.size() != 3 || in[0] != 3)
            throw Error("network " + spec_.arch.string() + " must take a [3, H, W] input, declares " + shape_to_string(in));
        height_ = in[1];
        width_ = in[2];
        network_ = std::move(net);
    } else if (spec_.kind == PipelineKind::Raw) {
        width_ = spec_.raw_width;
        height_ = spec_.raw_height;
    }

    if (spec_.kind == PipelineKind::Raw || spec_.kind == PipelineKind::Cnn) {
        resized_.resize(n);
        parallel_for(n, options.jobs, [&](std::size_t i) {
            resized_[i] = resize_bilinear(dataset.patches[i], width_, height_);
        });
    } else {
        descriptors_.resize(n);
        parallel_for(n, options.jobs, [&](std::size_t i) {
            descriptors_[i] = extract_dense_sift(dataset.patches[i], spec_.sampling);
        });
    }
}

std::vector<std::string> PreparedPipeline::taps() const {
    if (spec_.kind == PipelineKind::Cnn) return spec_.layers;
    return {spec_.display_label()};
}

FittedEncoder fit_encoder(const PreparedPipeline& pipeline, std::span<const std::size_t> train, std::uint64_t seed) {
    if (train.empty()) throw Error("no training samples");
    const PipelineSpec& spec = pipeline.spec();
    FittedEncoder enc;
    if (spec.kind == PipelineKind::Raw || spec.kind == PipelineKind::Cnn) {
        std::vector<ImagePatch> subset;
        subset.reserve(train.size());
        for (std::size_t i : train) subset.push_back(pipeline.resized().at(i));
        enc.mean_rgb = compute_mean_rgb(subset, pipeline.input_width(), pipeline.input_height());
        return enc;
    }

    // Random subset of all training descriptors.
    std::size_t total = 0;
    for (std::size_t i : train) total += static_cast<std::size_t>(pipeline.descriptors().at(i).size());
    SplitMix64 rng(fold_seed(seed, kSampleStream));
    const auto rows = sample_without_replacement(total, spec.codebook.max_descriptors, rng);
    RowMatrix<float> sample(static_cast<Eigen::Index>(rows.size()), kSiftDim);
    std::size_t offset = 0, r = 0;
    for (std::size_t i : train) {
        const DescriptorMatrix& v = pipeline.descriptors()[i].values;
        const auto count = static_cast<std::size_t>(v.rows());
        for (; r < rows.size() && rows[r] < offset + count; ++r)
            sample.row(static_cast<Eigen::Index>(r)) = v.row(static_cast<Eigen::Index>(rows[r] - offset));
        offset += count;
    }

    if (spec.kind == PipelineKind::Fisher) {
        GmmOptions g;
        g.k = spec.words;
        g.seed = fold_seed(seed, kCodebookStream);
        g.max_iter = spec.codebook.max_iter;
        g.rel_tol = spec.codebook.rel_tol;
        g.variance_floor = spec.codebook.variance_floor;
        enc.gmm = gmm_fit_em(sample, g);
    } else {
        KMeansOptions k;
        k.k = spec.words;
        k.seed = fold_seed(seed, kCodebookStream);
        k.max_iter = spec.codebook.max_iter;
        k.rel_tol = spec.codebook.rel_tol;
        enc.codebook = kmeans_fit(sample, k);
    }
    return enc;
}

std::vector<RowMatrix<float>> encode_samples(const PreparedPipeline& pipeline, const FittedEncoder& encoder,
                                             std::span<const std::size_t> indices) {
    const PipelineSpec& spec = pipeline.spec();
    const std::size_t taps = pipeline.taps().size();
    std::vector<RowMatrix<float>> out(taps);
    const auto rows = static_cast<Eigen::Index>(indices.size());

    auto store = [&](std::size_t tap, Eigen::Index row, const Eigen::VectorXf& values) {
        if (out[tap].rows() == 0) out[tap].resize(rows, values.size());
        out[tap].row(row) = values.transpose();
    };

    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t i = indices[static_cast<std::size_t>(r)];
        switch (spec.kind) {
        case PipelineKind::Raw:
        case PipelineKind::Cnn: {
            PreprocessSpec pre{pipeline.input_width(), pipeline.input_height(), encoder.mean_rgb};
            const Tensor input = preprocess(pipeline.resized().at(i), pre);
            if (spec.kind == PipelineKind::Raw) {
                store(0, r, input.flat());
            } else {
                const auto feats = extract_features(*pipeline.network(), input, spec.layers);
                for (std::size_t t = 0; t < taps; ++t) store(t, r, feats[t].values);
            }
            break;
        }
        case PipelineKind::Bovw:
            store(0, r, encode_bovw(*encoder.codebook, pipeline.descriptors().at(i).values).values);
            break;
        case PipelineKind::Vlad:
            store(0, r, encode_vlad(*encoder.codebook, pipeline.descriptors().at(i).values).values);
            break;
        case PipelineKind::Fisher:
            store(0, r, encode_fisher(*encoder.gmm, pipeline.descriptors().at(i).values).values);
            break;
        }
    }
    return out;
}

namespace {

std::vector<int> labels_of(const Dataset& ds, std::span<const std::size_t> idx) {
    std::vector<int> y;
    y.reserve(idx.size());
    for (std::size_t i : idx) y.push_back(ds.patches[i].label);
    return y;
}

} // namespace

FoldFit fit_fold(const PreparedPipeline& pipeline, std::span<const std::size_t> train, std::uint64_t seed) {
    FoldFit fit;
    fit.encoder = fit_encoder(pipeline, train, seed);
    const auto features = encode_samples(pipeline, fit.encoder, train);
    const auto y = labels_of(pipeline.dataset(), train);
    SvmTrainConfig cfg = pipeline.spec().svm;
    cfg.seed = fold_seed(seed, kSvmStream);
    for (const auto& x : features) {
        auto [model, sel] = fit_svm(x, y, pipeline.spec().c_grid, cfg, fold_seed(seed, kSelectStream));
        fit.svm.push_back(std::move(model));
        fit.selection.push_back(std::move(sel));
    }
    return fit;
}

std::vector<ExperimentResult> cross_validate(const PreparedPipeline& pipeline, const FoldPlan& plan,
                                             std::uint64_t seed, const HarnessOptions& options) {
    const auto taps = pipeline.taps();
    const auto t0 = Clock::now();
    std::vector<std::vector<double>> acc(static_cast<std::size_t>(plan.k), std::vector<double>(taps.size()));
    std::vector<std::size_t> dims(taps.size(), 0);

    parallel_for(static_cast<std::size_t>(plan.k), options.jobs, [&](std::size_t f) {
        const auto train = plan.train_indices(static_cast<int>(f));
        const auto test = plan.test_indices(static_cast<int>(f));
        const std::uint64_t fseed = SplitMix64::derive(seed, f);
        const FoldFit fit = fit_fold(pipeline, train, fseed);
        const auto x = encode_samples(pipeline, fit.encoder, test);
        const auto y = labels_of(pipeline.dataset(), test);
        for (std::size_t t = 0; t < taps.size(); ++t) {
            acc[f][t] = accuracy(fit.svm[t], x[t], y);
            if (f == 0) dims[t] = static_cast<std::size_t>(x[t].cols());
        }
    });

    const double elapsed = options.record_timing ? seconds_since(t0) : 0.0;
    std::vector<ExperimentResult> results;
    const bool multi = pipeline.spec().kind == PipelineKind::Cnn &&
                       (taps.size() > 1 || pipeline.spec().label.empty());
    for (std::size_t t = 0; t < taps.size(); ++t) {
        ExperimentResult r;
        if (pipeline.spec().kind == PipelineKind::Cnn)
            r.label = multi ? (pipeline.spec().label.empty() ? pipeline.spec().arch.stem().string() : pipeline.spec().label) + ":" + taps[t]
                            : pipeline.spec().label;
        else
            r.label = taps[t];
        for (int f = 0; f < plan.k; ++f) r.unit_accuracies.push_back(acc[static_cast<std::size_t>(f)][t]);
        std::tie(r.mean_accuracy, r.std_accuracy) = mean_and_std(r.unit_accuracies);
        r.feature_dim = dims[t];
        r.seeds = {seed};
        r.folds = plan.k;
        r.wall_time = elapsed / static_cast<double>(taps.size());
        results.push_back(std::move(r));
    }
    return results;
}

ExperimentResult run_cv(const PipelineSpec& pipeline, const Dataset& dataset, int k, std::uint64_t seed,
                        const HarnessOptions& options) {
    if (pipeline.kind == PipelineKind::Cnn && pipeline.layers.size() != 1)
        throw Error("run_cv takes a single cnn layer; use layer_sweep for several");
    const auto t0 = Clock::now();
    const PreparedPipeline prepared(pipeline, dataset, options);
    const FoldPlan plan = stratified_kfold(dataset.labels(), k, seed, dataset.class_names);
    ExperimentResult r = cross_validate(prepared, plan, seed, options).front();
    r.wall_time = options.record_timing ? seconds_since(t0) : 0.0;
    return r;
}

ExperimentResult run_trials(const PipelineSpec& pipeline, const Dataset& dataset, int trials, int k,
                            std::uint64_t base_seed, const HarnessOptions& options) {
    if (trials < 1) throw Error("run_trials needs trials >= 1");
    if (pipeline.kind == PipelineKind::Cnn && pipeline.layers.size() != 1)
        throw Error("run_trials takes a single cnn layer");
    const auto t0 = Clock::now();
    const PreparedPipeline prepared(pipeline, dataset, options);
    ExperimentResult out;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(t);
        const FoldPlan plan = stratified_kfold(dataset.labels(), k, seed, dataset.class_names);
        ExperimentResult r = cross_validate(prepared, plan, seed, options).front();
        if (t == 0) {
            out.label = r.label;
            out.feature_dim = r.feature_dim;
        }
        out.unit_accuracies.push_back(r.mean_accuracy);
        out.seeds.push_back(seed);
    }
    std::tie(out.mean_accuracy, out.std_accuracy) = mean_and_std(out.unit_accuracies);
    out.std_defined = trials > 1;
    out.folds = k;
    out.trials = trials;
    out.wall_time = options.record_timing ? seconds_since(t0) : 0.0;
    return out;
}

std::vector<ExperimentResult> layer_sweep(const std::filesystem::path& arch, const std::filesystem::path& weights,
                                          std::uint64_t weights_seed, const std::vector<std::string>& layer_names,
                                          const Dataset& dataset, int k, std::uint64_t seed,
                                          const PipelineSpec& base, const HarnessOptions& options) {
    PipelineSpec spec = base;
    spec.kind = PipelineKind::Cnn;
    spec.arch = arch;
    spec.weights = weights;
    spec.weights_seed = weights_seed;
    spec.layers = layer_names;
    const PreparedPipeline prepared(spec, dataset, options);
    const FoldPlan plan = stratified_kfold(dataset.labels(), k, seed, dataset.class_names);
    return cross_validate(prepared, plan, seed, options);
}

} // namespace texbench
