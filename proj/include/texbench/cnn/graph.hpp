#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "texbench/cnn/ops.hpp"
#include "texbench/cnn/tensor.hpp"

namespace texbench {

enum class LayerKind { Data, Conv, Relu, Lrn, MaxPool, AvgPool, Fc, Softmax, Concat, Dropout };

std::string to_string(LayerKind kind);

struct LayerNode {
    std::string name;
    LayerKind kind = LayerKind::Data;
    std::vector<std::string> inputs;

    int num_output = 0; // conv, fc
    int kernel_h = 1, kernel_w = 1;
    ConvParams conv;    // stride / pad / groups for conv; stride / pad reused by pooling
    LrnParams lrn;
    int axis = 0;       // concat
    /// In-place ReLU applied to the conv/fc output, so the tapped blob is post-activation.
    bool fused_relu = false;
    /// Optional "shape=" annotation; checked against shape inference on load.
    std::optional<Shape> declared_shape;

    PoolParams pool() const {
        return {kernel_h, kernel_w, conv.stride_h, conv.stride_w, conv.pad_h, conv.pad_w};
    }
};

/// Layer DAG in topological order, with the inferred output shape of every node.
struct NetworkGraph {
    std::vector<LayerNode> nodes;
    std::vector<Shape> shapes;
    Shape input_shape;

    /// Index of the named node or -1.
    int find(const std::string& name) const;
    /// Index of the named node; the error lists every available name.
    std::size_t index_of(const std::string& name) const;
    std::vector<std::string> names() const;
    const Shape& shape_of(const std::string& name) const { return shapes[index_of(name)]; }
};

/// Parses the line-oriented arch format, sorts nodes topologically and runs
/// shape inference. `source` names the text in error messages.
NetworkGraph parse_arch(const std::string& text, const std::string& source = "<arch>");
NetworkGraph load_arch(const std::filesystem::path& path);

/// Output shape of every node in `graph.nodes` order; throws ShapeError naming the node.
std::vector<Shape> infer_shapes(const std::vector<LayerNode>& nodes, const Shape& input_shape);

} // namespace texbench
