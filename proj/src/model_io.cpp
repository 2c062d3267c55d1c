#include "texbench/model_io.hpp"

#include "texbench/binary_io.hpp"

namespace texbench {

namespace {

template <typename M>
void put(BinaryWriter& w, const M& m) {
    const RowMatrix<float> f = m.template cast<float>();
    w.f32s(f.data(), static_cast<std::size_t>(f.size()));
}

RowMatrix<float> get(BinaryReader& r, std::uint32_t rows, std::uint32_t cols) {
    RowMatrix<float> m(rows, cols);
    r.f32s(m.data(), static_cast<std::size_t>(m.size()));
    return m;
}

std::uint32_t dim_u32(BinaryReader& r, const char* what) {
    const std::uint32_t v = r.u32();
    if (v > (1U << 28)) r.fail(std::string("implausible ") + what + " " + std::to_string(v));
    return v;
}

} // namespace

void write_descriptors(const DescriptorSet& set, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.magic("DSC1");
    w.u32(static_cast<std::uint32_t>(set.size()));
    w.u32(static_cast<std::uint32_t>(set.values.cols()));
    for (Eigen::Index i = 0; i < set.size(); ++i) {
        const Keypoint& kp = set.keypoints[static_cast<std::size_t>(i)];
        w.f32(static_cast<float>(kp.x));
        w.f32(static_cast<float>(kp.y));
        w.f32(static_cast<float>(kp.scale));
        w.f32s(set.values.row(i).data(), static_cast<std::size_t>(set.values.cols()));
    }
    w.close();
}

DescriptorSet read_descriptors(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic("DSC1");
    const std::uint32_t n = dim_u32(r, "count");
    const std::uint32_t d = r.u32();
    if (d != kSiftDim) r.fail("descriptor dimension must be 128");
    DescriptorSet set;
    set.values.resize(n, d);
    for (std::uint32_t i = 0; i < n; ++i) {
        const float x = r.f32(), y = r.f32(), s = r.f32();
        set.keypoints.push_back({static_cast<int>(x), static_cast<int>(y), static_cast<int>(s)});
        r.f32s(set.values.row(i).data(), d);
    }
    r.expect_end();
    return set;
}

void write_codebook(const Codebook<float>& cb, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.magic("CBK1");
    w.u32(static_cast<std::uint32_t>(cb.words()));
    w.u32(static_cast<std::uint32_t>(cb.dim()));
    put(w, cb.centroids);
    w.close();
}

Codebook<float> read_codebook(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic("CBK1");
    const auto k = dim_u32(r, "k"), d = dim_u32(r, "dim");
    Codebook<float> cb{get(r, k, d)};
    r.expect_end();
    return cb;
}

void write_gmm(const GmmModel<float>& gmm, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.magic("GMM1");
    w.u32(static_cast<std::uint32_t>(gmm.components()));
    w.u32(static_cast<std::uint32_t>(gmm.dim()));
    w.f32s(gmm.weights.data(), static_cast<std::size_t>(gmm.weights.size()));
    put(w, gmm.means);
    put(w, gmm.variances);
    w.close();
}

GmmModel<float> read_gmm(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic("GMM1");
    const auto k = dim_u32(r, "k"), d = dim_u32(r, "dim");
    GmmModel<float> g;
    g.weights.resize(k);
    r.f32s(g.weights.data(), k);
    g.means = get(r, k, d);
    g.variances = get(r, k, d);
    r.expect_end();
    return g;
}

void write_features(const FeatureMatrix& fm, const std::filesystem::path& path) {
    if (fm.labels.size() != static_cast<std::size_t>(fm.values.rows()))
        throw ShapeError("feature matrix rows and labels disagree");
    BinaryWriter w(path);
    w.magic("FMT1");
    w.u32(static_cast<std::uint32_t>(fm.values.rows()));
    w.u32(static_cast<std::uint32_t>(fm.values.cols()));
    for (int l : fm.labels) w.u32(static_cast<std::uint32_t>(l));
    put(w, fm.values);
    w.close();
}

FeatureMatrix read_features(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic("FMT1");
    const auto n = dim_u32(r, "n"), d = dim_u32(r, "dim");
    FeatureMatrix fm;
    for (std::uint32_t i = 0; i < n; ++i) fm.labels.push_back(static_cast<int>(r.u32()));
    fm.values = get(r, n, d);
    r.expect_end();
    return fm;
}

void write_svm(const LinearSvmModel& model, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.magic("SVM1");
    w.u32(static_cast<std::uint32_t>(model.classes()));
    w.u32(static_cast<std::uint32_t>(model.dim()));
    for (Eigen::Index c = 0; c < model.classes(); ++c) {
        put(w, model.weights.row(c));
        w.f32(static_cast<float>(model.bias(c)));
    }
    w.close();
}

LinearSvmModel read_svm(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic("SVM1");
    const auto k = dim_u32(r, "classes"), d = dim_u32(r, "dim");
    LinearSvmModel m;
    m.weights.resize(k, d);
    m.bias.resize(k);
    for (std::uint32_t c = 0; c < k; ++c) {
        m.weights.row(c) = get(r, 1, d).cast<double>();
        m.bias(c) = r.f32();
    }
    r.expect_end();
    return m;
}

} // namespace texbench
