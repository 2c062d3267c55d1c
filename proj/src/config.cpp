#include "texbench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "texbench/cnn/network.hpp"

namespace texbench {

namespace fs = std::filesystem;

namespace {

struct Ctx {
    std::string source;
    fs::path base_dir;

    [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
        const auto mark = at.Mark();
        throw ParseError(source, mark.line >= 0 ? static_cast<std::size_t>(mark.line + 1) : 0, what);
    }
    fs::path resolve(const std::string& p) const {
        fs::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    }
};

/// Mapping node that remembers which keys were read so unknown keys can be
/// reported.
class Section {
public:
    Section(YAML::Node node, std::string path, const Ctx& ctx) : node_(node), path_(std::move(path)), ctx_(&ctx) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) ctx.fail(node_, "'" + path_ + "' must be a mapping");
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    YAML::Node raw(const std::string& key) {
        used_.insert(key);
        if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
        const YAML::Node& view = node_; // const lookup leaves the map untouched
        return view[key];
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        YAML::Node n = raw(key);
        return n ? convert<T>(n, key) : fallback;
    }

    template <typename T>
    T require(const std::string& key) {
        YAML::Node n = raw(key);
        if (!n) ctx_->fail(node_, "'" + path_ + "' is missing '" + key + "'");
        return convert<T>(n, key);
    }

    template <typename T>
    std::vector<T> list(const std::string& key, std::vector<T> fallback) {
        YAML::Node n = raw(key);
        if (!n) return fallback;
        if (!n.IsSequence()) ctx_->fail(n, "'" + path_ + "." + key + "' must be a list");
        std::vector<T> out;
        for (const auto& item : n) out.push_back(convert<T>(item, key));
        return out;
    }

    Section sub(const std::string& key) { return Section(raw(key), path_ + "." + key, *ctx_); }

    const YAML::Node& node() const { return node_; }
    const std::string& path() const { return path_; }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.count(key)) ctx_->fail(kv.first, "unknown key '" + key + "' in '" + path_ + "'");
        }
    }

private:
    template <typename T>
    T convert(const YAML::Node& n, const std::string& key) const {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            ctx_->fail(n, "bad value for '" + path_ + "." + key + "'");
        }
    }

    YAML::Node node_;
    std::string path_;
    const Ctx* ctx_;
    std::set<std::string> used_;
};

std::pair<int, int> size_pair(Section& s, const std::string& key, std::pair<int, int> fallback, const Ctx& ctx) {
    YAML::Node n = s.raw(key);
    if (!n) return fallback;
    try {
        if (n.IsScalar()) {
            const int v = n.as<int>();
            return {v, v};
        }
        if (n.IsSequence() && n.size() == 2) return {n[0].as<int>(), n[1].as<int>()};
    } catch (const YAML::Exception&) {
    }
    ctx.fail(n, "'" + s.path() + "." + key + "' must be an integer or [width, height]");
}

TextureParams parse_texture(Section s, const Ctx& ctx, int label) {
    TextureParams p;
    const SyntheticSpec defaults;
    const TextureParams cycled = defaults.params_for(label);
    p.family = cycled.family;
    if (s.has("family")) {
        const YAML::Node n = s.raw("family");
        try {
            p.family = texture_family_from_string(n.as<std::string>());
        } catch (const std::exception& e) {
            ctx.fail(n, e.what());
        }
    }
    const auto cycles = s.list<double>("cycles", {p.cycles_min, p.cycles_max});
    if (cycles.size() != 2) ctx.fail(s.node(), "'cycles' must be [min, max]");
    p.cycles_min = cycles[0];
    p.cycles_max = cycles[1];
    p.orientation_deg = s.get("orientation_deg", p.orientation_deg);
    p.orientation_jitter_deg = s.get("orientation_jitter_deg", p.orientation_jitter_deg);
    p.contrast = s.get("contrast", p.contrast);
    const auto rgb = s.list<double>("base_rgb", {p.base_rgb[0], p.base_rgb[1], p.base_rgb[2]});
    if (rgb.size() != 3) ctx.fail(s.node(), "'base_rgb' must have three entries");
    p.base_rgb = {rgb[0], rgb[1], rgb[2]};
    s.finish();
    return p;
}

SyntheticSpec parse_synthetic(Section s, const Ctx& ctx) {
    SyntheticSpec spec;
    spec.num_classes = s.get("num_classes", spec.num_classes);
    spec.patches_per_class = s.get("patches_per_class", spec.patches_per_class);
    spec.min_px = s.get("min_px", spec.min_px);
    spec.max_px = s.get("max_px", spec.max_px);
    spec.noise_sigma = s.get("noise_sigma", spec.noise_sigma);
    spec.seed = s.get<std::uint64_t>("seed", spec.seed);
    YAML::Node classes = s.raw("classes");
    if (classes) {
        if (!classes.IsSequence()) ctx.fail(classes, "'classes' must be a list");
        int label = 0;
        for (const auto& c : classes) {
            spec.classes.push_back(parse_texture(Section(c, s.path() + ".classes", ctx), ctx, label));
            ++label;
        }
    }
    s.finish();
    try {
        spec.validate();
    } catch (const Error& e) {
        ctx.fail(s.node(), e.what());
    }
    return spec;
}

void parse_sampling(Section s, DenseSamplingSpec& out) {
    out.step = s.get("step", out.step);
    out.patch_sizes = s.list<int>("patch_sizes", out.patch_sizes);
    out.boundary_margin = s.get("margin", out.boundary_margin);
    s.finish();
}

void parse_svm(Section s, SvmTrainConfig& cfg, std::vector<double>& grid) {
    grid = s.list<double>("C_grid", grid);
    cfg.tolerance = s.get("tolerance", cfg.tolerance);
    cfg.max_iter = s.get("max_iter", cfg.max_iter);
    s.finish();
}

void parse_codebook(Section s, CodebookTraining& cb) {
    cb.max_descriptors = s.get<std::size_t>("max_descriptors", cb.max_descriptors);
    cb.max_iter = s.get("max_iter", cb.max_iter);
    cb.rel_tol = s.get("rel_tol", cb.rel_tol);
    cb.variance_floor = s.get("variance_floor", cb.variance_floor);
    s.finish();
}

PipelineSpec parse_pipeline(Section s, const Ctx& ctx, const PipelineSpec& defaults) {
    PipelineSpec p = defaults;
    const YAML::Node kind_node = s.raw("kind");
    if (!kind_node) ctx.fail(s.node(), "pipeline is missing 'kind'");
    try {
        p.kind = pipeline_kind_from_string(kind_node.as<std::string>());
    } catch (const std::exception& e) {
        ctx.fail(kind_node, e.what());
    }
    p.label = s.get<std::string>("label", "");
    switch (p.kind) {
    case PipelineKind::Raw:
        std::tie(p.raw_width, p.raw_height) = size_pair(s, "size", {p.raw_width, p.raw_height}, ctx);
        break;
    case PipelineKind::Cnn:
        p.arch = ctx.resolve(s.require<std::string>("arch"));
        if (s.has("weights")) p.weights = ctx.resolve(s.get<std::string>("weights", ""));
        p.weights_seed = s.get<std::uint64_t>("weights_seed", p.weights_seed);
        p.layers = s.list<std::string>("layers", {});
        if (s.has("layer")) p.layers.push_back(s.get<std::string>("layer", ""));
        break;
    default:
        p.words = s.get("words", p.words);
        if (s.has("local_features")) parse_sampling(s.sub("local_features"), p.sampling);
        if (s.has("codebook")) parse_codebook(s.sub("codebook"), p.codebook);
        break;
    }
    if (s.has("svm")) parse_svm(s.sub("svm"), p.svm, p.c_grid);
    s.finish();
    try {
        p.validate();
    } catch (const Error& e) {
        ctx.fail(s.node(), e.what());
    }
    return p;
}

} // namespace

void ExperimentConfig::validate() const {
    if (pipelines.empty()) throw Error("config has no pipelines");
    if (dataset_dir.has_value() == synthetic.has_value())
        throw Error("config needs exactly one of dataset.directory and dataset.synthetic");
    if (folds < 2) throw Error("cv.folds must be at least 2");
    if (trials < 1) throw Error("cv.trials must be at least 1");
    if (csv.empty()) throw Error("output.csv is required");
    if (!svg.empty() && fs::weakly_canonical(csv) == fs::weakly_canonical(svg))
        throw Error("output.csv and output.svg must be different files");
    std::set<std::string> labels;
    for (const auto& p : pipelines) {
        if (p.kind == PipelineKind::Cnn && p.layers.size() > 1) continue;
        if (!labels.insert(p.display_label()).second)
            throw Error("duplicate pipeline label '" + p.display_label() + "'");
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source, const fs::path& base_dir) {
    Ctx ctx{source, base_dir};
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), e.msg);
    }
    if (!root || !root.IsMap()) throw ParseError(source, 1, "config must be a mapping");
    Section top(root, "config", ctx);
    ExperimentConfig cfg;
    cfg.source = source;

    Section ds = top.sub("dataset");
    if (ds.has("directory")) cfg.dataset_dir = ctx.resolve(ds.get<std::string>("directory", ""));
    if (ds.has("synthetic")) cfg.synthetic = parse_synthetic(ds.sub("synthetic"), ctx);
    cfg.generate_dir = ctx.resolve(ds.get<std::string>("generate_dir", "synthetic_data"));
    ds.finish();

    Section cv = top.sub("cv");
    cfg.folds = cv.get("folds", cfg.folds);
    cfg.trials = cv.get("trials", cfg.trials);
    cfg.base_seed = cv.get<std::uint64_t>("base_seed", cfg.base_seed);
    cv.finish();

    // Shared defaults that individual pipelines may override.
    PipelineSpec defaults;
    if (top.has("svm")) parse_svm(top.sub("svm"), defaults.svm, defaults.c_grid);
    if (top.has("local_features")) parse_sampling(top.sub("local_features"), defaults.sampling);
    if (top.has("codebook")) parse_codebook(top.sub("codebook"), defaults.codebook);

    YAML::Node pipes = top.raw("pipelines");
    if (!pipes || !pipes.IsSequence()) ctx.fail(root, "'pipelines' must be a list");
    for (const auto& p : pipes) cfg.pipelines.push_back(parse_pipeline(Section(p, "pipelines[]", ctx), ctx, defaults));

    Section out = top.sub("output");
    cfg.csv = ctx.resolve(out.get<std::string>("csv", "results.csv"));
    if (out.has("svg")) cfg.svg = ctx.resolve(out.get<std::string>("svg", ""));
    out.finish();
    top.finish();

    try {
        cfg.validate();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(source, 0, e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string(), path.parent_path());
}

void check_pipeline(const PipelineSpec& spec) {
    spec.validate();
    if (spec.kind != PipelineKind::Cnn) return;
    const NetworkGraph graph = load_arch(spec.arch);
    for (const auto& layer : spec.layers) graph.index_of(layer);
    if (!spec.weights.empty()) validate_weights(graph, read_weights(spec.weights));
}

Dataset experiment_dataset(const ExperimentConfig& config) {
    if (config.dataset_dir) return load_dataset(*config.dataset_dir);
    if (config.synthetic) return generate_synthetic(*config.synthetic);
    throw Error("config names no dataset");
}

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& config, const Dataset& dataset,
                                             const HarnessOptions& options, const ProgressFn& progress) {
    for (const auto& p : config.pipelines) {
        try {
            check_pipeline(p);
        } catch (const std::exception& e) {
            throw PipelineError(p.display_label(), e.what());
        }
    }
    std::vector<ExperimentResult> results;
    for (const auto& p : config.pipelines) {
        const std::string label = p.display_label();
        if (progress) progress(label);
        try {
            if (p.uses_codebook()) {
                results.push_back(run_trials(p, dataset, config.trials, config.folds, config.base_seed, options));
            } else {
                const PreparedPipeline prepared(p, dataset, options);
                const FoldPlan plan = stratified_kfold(dataset.labels(), config.folds, config.base_seed, dataset.class_names);
                for (auto& r : cross_validate(prepared, plan, config.base_seed, options)) results.push_back(std::move(r));
            }
        } catch (const std::exception& e) {
            throw PipelineError(label, e.what());
        }
    }
    return results;
}

} // namespace texbench
