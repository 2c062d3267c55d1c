#include "texbench/cnn/tensor.hpp"

#include <sstream>

#include "texbench/error.hpp"

namespace texbench {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeError("negative dimension in shape " + shape_to_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
    return out.str();
}

Tensor::Tensor(Shape s, float fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<float> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_size(shape))
        throw ShapeError("tensor of shape " + shape_to_string(shape) + " given " +
                         std::to_string(values.size()) + " values");
}

} // namespace texbench
