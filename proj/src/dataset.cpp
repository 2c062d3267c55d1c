#include "texbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "texbench/error.hpp"
#include "texbench/random.hpp"

namespace texbench {

namespace fs = std::filesystem;

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(patches.size());
    for (const auto& p : patches) out.push_back(p.label);
    return out;
}

void Dataset::validate() const {
    std::set<std::string> ids;
    for (const auto& p : patches) {
        p.validate();
        if (p.label < 0 || static_cast<std::size_t>(p.label) >= class_names.size())
            throw Error("patch '" + p.id + "' has label " + std::to_string(p.label) +
                        " outside the " + std::to_string(class_names.size()) + " declared classes");
        if (!ids.insert(p.id).second) throw Error("duplicate patch id '" + p.id + "'");
    }
}

std::string to_string(TextureFamily family) {
    switch (family) {
    case TextureFamily::OrientedGrating: return "oriented-grating";
    case TextureFamily::Checker: return "checker";
    case TextureFamily::BlobNoise: return "blob-noise";
    }
    return "?";
}

TextureFamily texture_family_from_string(const std::string& name) {
    if (name == "oriented-grating") return TextureFamily::OrientedGrating;
    if (name == "checker") return TextureFamily::Checker;
    if (name == "blob-noise") return TextureFamily::BlobNoise;
    throw Error("unknown texture family '" + name + "'");
}

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw Error("synthetic spec needs at least 2 classes");
    if (patches_per_class < 1) throw Error("synthetic spec needs patches_per_class >= 1");
    if (min_px < 32) throw Error("synthetic spec min_px must be >= 32");
    if (max_px < min_px) throw Error("synthetic spec max_px must be >= min_px");
    if (!(noise_sigma >= 0.0)) throw Error("synthetic spec noise_sigma must be >= 0");
    if (classes.size() > static_cast<std::size_t>(num_classes))
        throw Error("synthetic spec lists more texture entries than classes");
    for (const auto& c : classes) {
        if (!(c.cycles_min > 0.0) || c.cycles_max < c.cycles_min)
            throw Error("synthetic spec has an invalid cycles range");
    }
}

TextureParams SyntheticSpec::params_for(int label) const {
    if (static_cast<std::size_t>(label) < classes.size()) return classes[label];
    static constexpr TextureFamily kCycle[] = {TextureFamily::OrientedGrating, TextureFamily::Checker,
                                               TextureFamily::BlobNoise};
    TextureParams p;
    p.family = kCycle[label % 3];
    return p;
}

void PreprocessSpec::validate() const {
    if (target_width < 8 || target_height < 8)
        throw Error("preprocess target size must be at least 8x8");
    for (float m : mean_rgb)
        if (!(m >= 0.0F && m <= 255.0F)) throw Error("preprocess mean_rgb must lie in [0, 255]");
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".ppm";
}

// Unit-variance, zero-mean pattern of the requested family.
std::vector<double> render_pattern(int w, int h, const TextureParams& tp, SplitMix64& rng) {
    std::vector<double> field(static_cast<std::size_t>(w) * h, 0.0);
    const double shorter = std::min(w, h);
    const double cycles = rng.uniform(tp.cycles_min, tp.cycles_max);
    const double period = shorter / cycles;
    const double theta =
        (tp.orientation_deg + rng.uniform(-tp.orientation_jitter_deg, tp.orientation_jitter_deg)) *
        std::numbers::pi / 180.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double omega = 2.0 * std::numbers::pi / period;

    switch (tp.family) {
    case TextureFamily::OrientedGrating: {
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                field[static_cast<std::size_t>(y) * w + x] = std::sin(omega * (x * ct + y * st) + phase);
        break;
    }
    case TextureFamily::Checker: {
        const double pu = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double pv = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double u = x * ct + y * st;
                const double v = -x * st + y * ct;
                const double s = std::sin(omega * u + pu) * std::sin(omega * v + pv);
                field[static_cast<std::size_t>(y) * w + x] = s >= 0.0 ? 1.0 : -1.0;
            }
        break;
    }
    case TextureFamily::BlobNoise: {
        const double sigma = period / 4.0;
        const int count = std::max(1, static_cast<int>(std::lround(2.0 * w * h / (period * period))));
        const int reach = static_cast<int>(std::ceil(3.0 * sigma));
        for (int b = 0; b < count; ++b) {
            const double cx = rng.uniform(0.0, w);
            const double cy = rng.uniform(0.0, h);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const int x0 = std::max(0, static_cast<int>(cx) - reach);
            const int x1 = std::min(w - 1, static_cast<int>(cx) + reach);
            const int y0 = std::max(0, static_cast<int>(cy) - reach);
            const int y1 = std::min(h - 1, static_cast<int>(cy) + reach);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - cx;
                    const double dy = y - cy;
                    field[static_cast<std::size_t>(y) * w + x] +=
                        sign * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                }
        }
        break;
    }
    }

    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : field) v = (v - mean) * inv;
    return field;
}

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

} // namespace

Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw Error("dataset root is not a directory: " + root.string());
    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw Error("dataset root has no class directories: " + root.string());

    Dataset ds;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
        const std::string name = class_dirs[c].filename().string();
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dirs[c]))
            if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw Error("class directory has no images: " + class_dirs[c].string());
        ds.class_names.push_back(name);
        for (const auto& f : files) {
            ImagePatch p = read_image(f);
            p.label = static_cast<int>(c);
            p.id = name + "/" + f.filename().string();
            ds.patches.push_back(std::move(p));
        }
    }
    ds.validate();
    return ds;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    for (int c = 0; c < spec.num_classes; ++c) ds.class_names.push_back("class" + std::to_string(c));

    std::uint64_t index = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        const TextureParams tp = spec.params_for(c);
        for (int i = 0; i < spec.patches_per_class; ++i, ++index) {
            SplitMix64 rng(SplitMix64::derive(spec.seed, index));
            const int w = static_cast<int>(rng.between(spec.min_px, spec.max_px));
            const int h = static_cast<int>(rng.between(spec.min_px, spec.max_px));
            const auto field = render_pattern(w, h, tp, rng);

            ImagePatch p;
            p.width = w;
            p.height = h;
            p.label = c;
            char id[32];
            std::snprintf(id, sizeof id, "%04d", i);
            p.id = ds.class_names[c] + "/" + id;
            p.pixels.resize(static_cast<std::size_t>(w) * h * 3);
            for (std::size_t k = 0; k < field.size(); ++k)
                for (int ch = 0; ch < 3; ++ch)
                    p.pixels[k * 3 + ch] = to_u8(tp.base_rgb[ch] + tp.contrast * field[k] +
                                                 spec.noise_sigma * rng.normal());
            ds.patches.push_back(std::move(p));
        }
    }
    return ds;
}

ImagePatch resize_bilinear(const ImagePatch& patch, int target_width, int target_height) {
    patch.validate();
    if (target_width < 1 || target_height < 1) throw Error("resize target must be at least 1x1");

    struct Tap {
        int i0, i1;
        float w1;
    };
    auto taps = [](int src, int dst) {
        std::vector<Tap> t(dst);
        const float scale = static_cast<float>(src) / static_cast<float>(dst);
        for (int o = 0; o < dst; ++o) {
            float s = (static_cast<float>(o) + 0.5F) * scale - 0.5F;
            s = std::clamp(s, 0.0F, static_cast<float>(src - 1));
            const int i0 = static_cast<int>(s);
            t[o] = {i0, std::min(i0 + 1, src - 1), s - static_cast<float>(i0)};
        }
        return t;
    };
    const auto tx = taps(patch.width, target_width);
    const auto ty = taps(patch.height, target_height);

    ImagePatch out;
    out.width = target_width;
    out.height = target_height;
    out.label = patch.label;
    out.id = patch.id;
    out.pixels.resize(static_cast<std::size_t>(target_width) * target_height * 3);
    for (int y = 0; y < target_height; ++y) {
        const Tap& ry = ty[y];
        for (int x = 0; x < target_width; ++x) {
            const Tap& rx = tx[x];
            for (int c = 0; c < 3; ++c) {
                const float top = patch.at(rx.i0, ry.i0, c) * (1.0F - rx.w1) + patch.at(rx.i1, ry.i0, c) * rx.w1;
                const float bot = patch.at(rx.i0, ry.i1, c) * (1.0F - rx.w1) + patch.at(rx.i1, ry.i1, c) * rx.w1;
                out.at(x, y, c) = to_u8(top * (1.0F - ry.w1) + bot * ry.w1);
            }
        }
    }
    return out;
}

Tensor preprocess(const ImagePatch& patch, const PreprocessSpec& spec) {
    spec.validate();
    const ImagePatch resized = resize_bilinear(patch, spec.target_width, spec.target_height);
    Tensor t({3, spec.target_height, spec.target_width});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < spec.target_height; ++y)
            for (int x = 0; x < spec.target_width; ++x)
                t.at(c, y, x) = static_cast<float>(resized.at(x, y, c)) - spec.mean_rgb[c];
    return t;
}

namespace {

template <typename Range, typename Get>
std::array<float, 3> mean_rgb_of(const Range& items, Get get, int target_width, int target_height) {
    if (items.empty()) throw Error("compute_mean_rgb needs at least one patch");
    std::array<double, 3> sum{};
    std::size_t count = 0;
    for (const auto& item : items) {
        const ImagePatch r = resize_bilinear(get(item), target_width, target_height);
        for (std::size_t i = 0; i < r.pixels.size(); i += 3)
            for (int c = 0; c < 3; ++c) sum[c] += r.pixels[i + c];
        count += r.pixels.size() / 3;
    }
    return {static_cast<float>(sum[0] / count), static_cast<float>(sum[1] / count),
            static_cast<float>(sum[2] / count)};
}

} // namespace

std::array<float, 3> compute_mean_rgb(std::span<const ImagePatch> patches, int target_width,
                                      int target_height) {
    return mean_rgb_of(patches, [](const ImagePatch& p) -> const ImagePatch& { return p; },
                       target_width, target_height);
}

std::array<float, 3> compute_mean_rgb(const Dataset& dataset, std::span<const std::size_t> indices,
                                      int target_width, int target_height) {
    return mean_rgb_of(indices,
                       [&](std::size_t i) -> const ImagePatch& { return dataset.patches.at(i); },
                       target_width, target_height);
}

SizeHistogram size_histogram(const Dataset& dataset, int bin_width) {
    if (bin_width < 1) throw Error("size_histogram bin_width must be >= 1");
    SizeHistogram h;
    h.bin_width = bin_width;
    std::size_t bins = 0;
    for (const auto& p : dataset.patches)
        bins = std::max(bins, static_cast<std::size_t>(std::max(p.width, p.height) / bin_width) + 1);
    h.counts.assign(dataset.num_classes(), std::vector<int>(bins, 0));
    for (const auto& p : dataset.patches)
        ++h.counts.at(p.label)[std::max(p.width, p.height) / bin_width];
    return h;
}

} // namespace texbench
