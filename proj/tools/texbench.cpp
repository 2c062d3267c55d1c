// texbench command line: generate, run, inspect, report.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "texbench/cnn/graph.hpp"
#include "texbench/config.hpp"
#include "texbench/image.hpp"
#include "texbench/report.hpp"

namespace fs = std::filesystem;
using namespace texbench;

namespace {

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

int cmd_generate(const fs::path& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
    const ExperimentConfig cfg = load_config(config_path);
    if (!cfg.synthetic) throw Error("generate needs dataset.synthetic in " + config_path.string());
    SyntheticSpec spec = *cfg.synthetic;
    if (seed) spec.seed = *seed;
    const fs::path root = out_dir.empty() ? cfg.generate_dir : fs::path(out_dir);
    const Dataset ds = generate_synthetic(spec);

    fs::create_directories(root);
    std::ofstream manifest(root / "manifest.txt");
    if (!manifest) throw Error("cannot write " + (root / "manifest.txt").string());
    manifest << "# texbench synthetic dataset\n";
    manifest << "seed=" << spec.seed << "\n";
    manifest << "classes=" << spec.num_classes << " patches_per_class=" << spec.patches_per_class
             << " min_px=" << spec.min_px << " max_px=" << spec.max_px << " noise_sigma=" << spec.noise_sigma << "\n";
    for (const auto& p : ds.patches) {
        const fs::path file = root / (p.id + ".png");
        fs::create_directories(file.parent_path());
        write_png(p, file);
        manifest << p.id << ".png " << p.width << "x" << p.height << " " << hex64(fnv1a_file(file)) << "\n";
    }
    std::cout << "wrote " << ds.size() << " patches in " << ds.num_classes() << " classes to " << root.string() << "\n";
    return 0;
}

int cmd_run(const fs::path& config_path, int jobs, std::optional<std::uint64_t> seed, bool timing) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.base_seed = *seed;
    const Dataset ds = experiment_dataset(cfg);
    std::cerr << "dataset: " << ds.size() << " patches, " << ds.num_classes() << " classes\n";
    HarnessOptions opt;
    opt.jobs = jobs;
    opt.record_timing = timing;
    const auto results = run_experiment(cfg, ds, opt, [](const std::string& label) {
        std::cerr << "running " << label << "\n";
    });
    report(results, cfg.csv, cfg.svg);
    for (const auto& r : results)
        std::cout << std::left << std::setw(24) << r.label << std::right << std::fixed << std::setprecision(4)
                  << r.mean_accuracy << " +/- " << r.std_accuracy << "  dim " << r.feature_dim << "\n";
    std::cout << "csv: " << cfg.csv.string() << "\n";
    if (!cfg.svg.empty()) std::cout << "svg: " << cfg.svg.string() << "\n";
    return 0;
}

int cmd_inspect(const fs::path& arch) {
    const NetworkGraph g = load_arch(arch);
    std::cout << std::left << std::setw(28) << "name" << std::setw(10) << "kind" << std::setw(16) << "shape"
              << "dim\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        std::cout << std::left << std::setw(28) << g.nodes[i].name << std::setw(10) << to_string(g.nodes[i].kind)
                  << std::setw(16) << shape_to_string(g.shapes[i]) << shape_size(g.shapes[i]) << "\n";
    }
    return 0;
}

int cmd_report(const fs::path& csv, const fs::path& svg, const std::string& title) {
    const auto rows = read_csv(csv);
    if (rows.empty()) throw Error(csv.string() + " has no result rows");
    std::ofstream out(svg, std::ios::binary);
    if (!out) throw Error("cannot write " + svg.string());
    out << render_svg(rows, title);
    std::cout << "svg: " << svg.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"texbench: texture classification benchmark"};
    app.require_subcommand(1);

    std::string config;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    bool no_timing = false;
    std::string out_dir, arch, csv, svg, title;

    auto* gen = app.add_subcommand("generate", "write the synthetic dataset as PNG files plus a manifest");
    gen->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out_dir, "output directory (default: dataset.generate_dir)");
    gen->add_option("--seed", seed, "override the synthetic dataset seed");

    auto* run = app.add_subcommand("run", "run every pipeline of a config and write CSV/SVG");
    run->add_option("--config", config, "experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--jobs", jobs, "worker threads across folds")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "override cv.base_seed");
    run->add_flag("--no-timing", no_timing, "write wall_time_s as 0 so reruns are byte-identical");

    auto* ins = app.add_subcommand("inspect", "print the layer table of an arch file");
    ins->add_option("arch", arch, "arch file")->required()->check(CLI::ExistingFile);

    auto* rep = app.add_subcommand("report", "render an SVG chart from a results CSV");
    rep->add_option("--csv", csv, "results CSV")->required()->check(CLI::ExistingFile);
    rep->add_option("--svg", svg, "output SVG")->required();
    rep->add_option("--title", title, "chart title");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_generate(config, out_dir, seed);
        if (*run) return cmd_run(config, jobs, seed, !no_timing);
        if (*ins) return cmd_inspect(arch);
        if (*rep) return cmd_report(csv, svg, title);
    } catch (const PipelineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
