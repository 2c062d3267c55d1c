#include <cmath>

#include "texbench/binary_io.hpp"
#include "texbench/cnn/network.hpp"
#include "texbench/error.hpp"
#include "texbench/random.hpp"

namespace texbench {

namespace {

constexpr std::uint32_t kWeightsVersion = 1;

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::vector<Shape> expected_param_shapes(const NetworkGraph& graph, std::size_t i) {
    const LayerNode& n = graph.nodes.at(i);
    if (n.kind == LayerKind::Conv) {
        const Shape& in = graph.shape_of(n.inputs.at(0));
        return {{n.num_output, in[0] / n.conv.groups, n.kernel_h, n.kernel_w}, {n.num_output}};
    }
    if (n.kind == LayerKind::Fc) {
        const auto in = static_cast<int>(shape_size(graph.shape_of(n.inputs.at(0))));
        return {{n.num_output, in}, {n.num_output}};
    }
    return {};
}

void validate_weights(const NetworkGraph& graph, const WeightStore& weights) {
    for (const auto& [name, tensors] : weights)
        if (graph.find(name) < 0) throw ShapeError("weights given for unknown layer '" + name + "'");
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto expected = expected_param_shapes(graph, i);
        const std::string& name = graph.nodes[i].name;
        auto it = weights.find(name);
        if (expected.empty()) {
            if (it != weights.end() && !it->second.empty())
                throw ShapeError("layer '" + name + "' takes no parameters but weights were given");
            continue;
        }
        if (it == weights.end()) throw ShapeError("missing weights for layer '" + name + "'");
        if (it->second.size() != expected.size())
            throw ShapeError("layer '" + name + "' expects " + std::to_string(expected.size()) + " tensors, got " +
                             std::to_string(it->second.size()));
        for (std::size_t t = 0; t < expected.size(); ++t)
            if (it->second[t].shape != expected[t])
                throw ShapeError("layer '" + name + "' parameter " + std::to_string(t) + " has shape " +
                                 shape_to_string(it->second[t].shape) + ", expected " + shape_to_string(expected[t]));
    }
}

WeightStore init_weights(const NetworkGraph& graph, std::uint64_t seed) {
    WeightStore ws;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto shapes = expected_param_shapes(graph, i);
        if (shapes.empty()) continue;
        const LayerNode& n = graph.nodes[i];
        const Shape& k = shapes[0];
        double fan_in, fan_out;
        if (n.kind == LayerKind::Conv) {
            const double receptive = static_cast<double>(k[2]) * k[3];
            fan_in = k[1] * receptive;
            fan_out = static_cast<double>(k[0]) / n.conv.groups * receptive;
        } else {
            fan_in = k[1];
            fan_out = k[0];
        }
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        SplitMix64 rng(SplitMix64::derive(seed, name_hash(n.name)));
        Tensor kernel(k);
        for (float& v : kernel.values) v = static_cast<float>(rng.uniform(-s, s));
        ws[n.name] = {std::move(kernel), Tensor(shapes[1], 0.0F)};
    }
    return ws;
}

void write_weights(const WeightStore& weights, const std::filesystem::path& path) {
    BinaryWriter w(path);
    w.magic("CNNW");
    w.u32(kWeightsVersion);
    w.u32(static_cast<std::uint32_t>(weights.size()));
    for (const auto& [name, tensors] : weights) {
        if (name.size() > 0xFFFF) throw Error("layer name too long: " + name);
        if (tensors.size() > 0xFF) throw Error("too many tensors for layer " + name);
        w.u16(static_cast<std::uint16_t>(name.size()));
        for (char c : name) w.u8(static_cast<std::uint8_t>(c));
        w.u8(static_cast<std::uint8_t>(tensors.size()));
        for (const Tensor& t : tensors) {
            w.u8(static_cast<std::uint8_t>(t.rank()));
            for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
            w.f32s(t.data(), t.size());
        }
    }
    w.close();
}

WeightStore read_weights(const std::filesystem::path& path) {
    BinaryReader r(path);
    r.expect_magic("CNNW");
    if (const auto v = r.u32(); v != kWeightsVersion) r.fail("unsupported weights version " + std::to_string(v));
    const std::uint32_t layers = r.u32();
    WeightStore ws;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::string name = r.str(r.u16());
        const std::uint8_t count = r.u8();
        std::vector<Tensor> tensors;
        for (std::uint8_t t = 0; t < count; ++t) {
            const std::uint8_t ndim = r.u8();
            Shape shape(ndim);
            std::size_t total = 1;
            for (auto& d : shape) {
                const std::uint32_t v = r.u32();
                if (v == 0 || v > (1U << 30)) r.fail("bad dimension in layer '" + name + "'");
                d = static_cast<int>(v);
                total *= v;
                if (total > (std::size_t{1} << 33)) r.fail("tensor too large in layer '" + name + "'");
            }
            Tensor tensor(shape);
            r.f32s(tensor.data(), tensor.size());
            tensors.push_back(std::move(tensor));
        }
        if (!ws.emplace(name, std::move(tensors)).second) r.fail("duplicate layer '" + name + "'");
    }
    r.expect_end();
    return ws;
}

} // namespace texbench
