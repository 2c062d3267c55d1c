#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "texbench/cnn/graph.hpp"
#include "texbench/cnn/tensor.hpp"
#include "texbench/encode.hpp"

namespace texbench {

/// Learned parameters per layer: conv {kernel [O, C/g, kh, kw], bias [O]},
/// fc {matrix [out, in], bias [out]}.
using WeightStore = std::map<std::string, std::vector<Tensor>>;

/// Parameter shapes the graph requires for node `i` (empty for parameter-free kinds).
std::vector<Shape> expected_param_shapes(const NetworkGraph& graph, std::size_t i);

/// Every conv/fc node has exactly matching tensors; no entries for unknown layers.
void validate_weights(const NetworkGraph& graph, const WeightStore& weights);

/// Glorot-uniform kernels in [-s, s], s = sqrt(6 / (fan_in + fan_out)), zero
/// biases. Each layer draws from its own stream derived from `seed` and the
/// layer name.
WeightStore init_weights(const NetworkGraph& graph, std::uint64_t seed);

/// "CNNW" container: magic, u32 version, u32 layer count, then per layer a
/// u16 name length + UTF-8 name, u8 tensor count, and per tensor u8 ndim,
/// u32 dims, raw float32 values. All integers and floats little-endian.
void write_weights(const WeightStore& weights, const std::filesystem::path& path);
WeightStore read_weights(const std::filesystem::path& path);

struct Network {
    NetworkGraph graph;
    WeightStore weights;
};

/// Loads and cross-checks an arch file with its weights file.
Network load_network(const std::filesystem::path& arch_file, const std::filesystem::path& weights_file);

using Activations = std::map<std::string, Tensor>;

struct ForwardStats {
    std::vector<int> evaluations; ///< per node, graph order
};

/// Evaluates every node once in topological order. The result includes the
/// data node itself.
Activations forward(const Network& net, const Tensor& input, ForwardStats* stats = nullptr);

/// Flattened activation of `layer_name`, provenance cnn:<layer_name>.
FeatureVector extract_feature(const Network& net, const Tensor& input, const std::string& layer_name);

/// Several taps from a single forward pass, in request order.
std::vector<FeatureVector> extract_features(const Network& net, const Tensor& input,
                                            std::span<const std::string> layer_names);

} // namespace texbench
