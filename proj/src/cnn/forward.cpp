#include "texbench/cnn/network.hpp"
#include "texbench/error.hpp"

namespace texbench {

Network load_network(const std::filesystem::path& arch_file, const std::filesystem::path& weights_file) {
    Network net{load_arch(arch_file), read_weights(weights_file)};
    validate_weights(net.graph, net.weights);
    return net;
}

Activations forward(const Network& net, const Tensor& input, ForwardStats* stats) {
    const NetworkGraph& g = net.graph;
    if (input.shape != g.input_shape)
        throw ShapeError("input shape " + shape_to_string(input.shape) + " does not match declared " +
                         shape_to_string(g.input_shape));
    if (stats) stats->evaluations.assign(g.nodes.size(), 0);

    std::vector<Tensor> act(g.nodes.size());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const LayerNode& n = g.nodes[i];
        std::vector<const Tensor*> in;
        for (const auto& name : n.inputs) in.push_back(&act[index.at(name)]);
        auto params = [&]() -> const std::vector<Tensor>& {
            auto it = net.weights.find(n.name);
            if (it == net.weights.end() || it->second.size() != 2)
                throw ShapeError("layer '" + n.name + "' has no weights");
            return it->second;
        };
        try {
            switch (n.kind) {
            case LayerKind::Data: act[i] = input; break;
            case LayerKind::Conv: act[i] = conv2d(*in[0], params()[0], params()[1], n.conv); break;
            case LayerKind::Relu: act[i] = relu(*in[0]); break;
            case LayerKind::Lrn: act[i] = lrn(*in[0], n.lrn); break;
            case LayerKind::MaxPool: act[i] = maxpool(*in[0], n.pool()); break;
            case LayerKind::AvgPool: act[i] = avgpool(*in[0], n.pool()); break;
            case LayerKind::Fc: act[i] = fully_connected(*in[0], params()[0], params()[1]); break;
            case LayerKind::Softmax: act[i] = softmax(*in[0]); break;
            case LayerKind::Concat: act[i] = concat(in, n.axis); break;
            case LayerKind::Dropout: act[i] = *in[0]; break;
            }
        } catch (const ShapeError& e) {
            throw ShapeError("layer '" + n.name + "': " + e.what());
        }
        if (n.fused_relu) relu_inplace(act[i]);
        if (act[i].shape != g.shapes[i])
            throw ShapeError("layer '" + n.name + "' produced " + shape_to_string(act[i].shape) + ", expected " +
                             shape_to_string(g.shapes[i]));
        if (stats) ++stats->evaluations[i];
        index[n.name] = i;
    }

    Activations out;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) out.emplace(g.nodes[i].name, std::move(act[i]));
    return out;
}

std::vector<FeatureVector> extract_features(const Network& net, const Tensor& input,
                                            std::span<const std::string> layer_names) {
    for (const auto& name : layer_names) net.graph.index_of(name);
    const Activations act = forward(net, input);
    std::vector<FeatureVector> out;
    for (const auto& name : layer_names) {
        const Tensor& t = act.at(name);
        out.push_back({t.flat(), FeatureKind::Cnn, name});
    }
    return out;
}

FeatureVector extract_feature(const Network& net, const Tensor& input, const std::string& layer_name) {
    const std::string names[] = {layer_name};
    return extract_features(net, input, names).front();
}

} // namespace texbench
