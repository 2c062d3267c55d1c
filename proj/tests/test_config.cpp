#include <doctest.h>

#include "test_util.hpp"
#include "texbench/config.hpp"

#ifndef TEXBENCH_ARCH_DIR
#error "TEXBENCH_ARCH_DIR must point at the shipped arch files"
#endif

using namespace texbench;

namespace {

const std::string kArch = std::string(TEXBENCH_ARCH_DIR) + "/smallnet.arch";

std::string tiny_config(const std::string& pipelines) {
    return "dataset:\n"
           "  synthetic: {num_classes: 3, patches_per_class: 6, min_px: 40, max_px: 56, seed: 5}\n"
           "cv: {folds: 3, trials: 2, base_seed: 9}\n"
           "svm: {C_grid: [0.1, 10]}\n"
           "local_features: {step: 12, patch_sizes: [16], margin: 8}\n"
           "codebook: {max_descriptors: 200, max_iter: 10}\n"
           "pipelines:\n" +
           pipelines + "output: {csv: out/r.csv, svg: out/r.svg}\n";
}

} // namespace

TEST_CASE("parse a full config") {
    const ExperimentConfig cfg = parse_config(tiny_config("  - {kind: raw, size: [32, 24]}\n"
                                                          "  - {kind: cnn, arch: " + kArch + ", layers: [conv1, fc1]}\n"
                                                          "  - {kind: fisher, words: 4, svm: {C_grid: [1]}}\n"),
                                              "t.yaml", "/base");
    REQUIRE(cfg.synthetic);
    CHECK(cfg.synthetic->patches_per_class == 6);
    CHECK(cfg.folds == 3);
    CHECK(cfg.trials == 2);
    CHECK(cfg.base_seed == 9);
    REQUIRE(cfg.pipelines.size() == 3);
    CHECK(cfg.pipelines[0].raw_width == 32);
    CHECK(cfg.pipelines[0].raw_height == 24);
    CHECK(cfg.pipelines[0].c_grid == std::vector<double>{0.1, 10});
    CHECK(cfg.pipelines[1].layers == std::vector<std::string>{"conv1", "fc1"});
    CHECK(cfg.pipelines[1].arch == kArch);
    CHECK(cfg.pipelines[2].c_grid == std::vector<double>{1});
    CHECK(cfg.pipelines[2].sampling.step == 12);
    CHECK(cfg.pipelines[2].codebook.max_descriptors == 200);
    CHECK(cfg.csv == std::filesystem::path("/base/out/r.csv"));
    CHECK(cfg.svg == std::filesystem::path("/base/out/r.svg"));
    CHECK(cfg.generate_dir == std::filesystem::path("/base/synthetic_data"));
}

TEST_CASE("config errors") {
    CHECK_THROWS_WITH_AS(parse_config(tiny_config("  - {kind: raw, colour: red}\n")), doctest::Contains("colour"), ParseError);
    try {
        parse_config("dataset: {directory: d}\ncv: {folds: 3}\nbogus: 1\npipelines: [{kind: raw}]\n", "c.yaml");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("dataset: {directory: d}\n"), ParseError);
    CHECK_THROWS_AS(parse_config(tiny_config("  []\n")), ParseError);
    CHECK_THROWS_AS(parse_config(tiny_config("  - {kind: sift}\n")), ParseError);
    CHECK_THROWS_AS(parse_config("pipelines: [{kind: raw}]\n"), ParseError); // no dataset
    CHECK_THROWS_AS(parse_config("dataset: [\n"), ParseError);
    CHECK_THROWS_AS(parse_config(tiny_config("  - {kind: raw}\n  - {kind: raw}\n")), ParseError); // duplicate label
}

TEST_CASE("relative paths resolve against the config file") {
    TempDir dir;
    write_text(dir / "sub/exp.yaml", tiny_config("  - {kind: raw, size: 8}\n"));
    const ExperimentConfig cfg = load_config(dir / "sub/exp.yaml");
    CHECK(cfg.csv == dir / "sub/out/r.csv");
    CHECK_THROWS_AS(load_config(dir / "nope.yaml"), Error);
}

TEST_CASE("run_experiment: rows in config order") {
    TempDir dir;
    write_text(dir / "exp.yaml", tiny_config("  - {kind: raw, size: 8}\n"
                                             "  - {kind: bovw, words: 4}\n"));
    const ExperimentConfig cfg = load_config(dir / "exp.yaml");
    const Dataset d = experiment_dataset(cfg);
    CHECK(d.size() == 18);
    std::vector<std::string> progress;
    const auto results = run_experiment(cfg, d, {1, false}, [&](const std::string& s) { progress.push_back(s); });
    REQUIRE(results.size() == 2);
    CHECK(results[0].label == "raw8x8");
    CHECK(results[0].trials == 1);
    CHECK(results[1].label == "bovw4");
    CHECK(results[1].trials == 2);
    CHECK(results[1].seeds == std::vector<std::uint64_t>{9, 10});
    CHECK(progress.size() == 2);
}

TEST_CASE("run_experiment: one cnn pipeline gives one row per layer") {
    const ExperimentConfig cfg = parse_config(tiny_config("  - {kind: cnn, label: net, arch: " + kArch +
                                                          ", layer: conv2}\n"));
    const auto results = run_experiment(cfg, experiment_dataset(cfg), {1, false});
    REQUIRE(results.size() == 1);
    CHECK(results[0].feature_dim == 32 * 13 * 13);
}

TEST_CASE("invalid pipelines fail before any training") {
    const ExperimentConfig cfg = parse_config(tiny_config("  - {kind: bovw, words: 4}\n"
                                                          "  - {kind: cnn, label: bad, arch: " + kArch +
                                                          ", layers: [conv1, nope]}\n"));
    int started = 0;
    try {
        run_experiment(cfg, experiment_dataset(cfg), {}, [&](const std::string&) { ++started; });
        FAIL("expected a pipeline error");
    } catch (const PipelineError& e) {
        CHECK(e.pipeline() == "bad");
        CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }
    CHECK(started == 0);

    PipelineSpec missing;
    missing.kind = PipelineKind::Cnn;
    missing.arch = "/no/such.arch";
    missing.layers = {"data"};
    CHECK_THROWS_AS(check_pipeline(missing), Error);
}
