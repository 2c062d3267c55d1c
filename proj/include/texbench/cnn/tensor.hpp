#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace texbench {

using Shape = std::vector<int>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major float tensor, batch size 1. Images use [C, H, W].
struct Tensor {
    Shape shape;
    std::vector<float> values;

    Tensor() = default;
    explicit Tensor(Shape s, float fill = 0.0F);
    Tensor(Shape s, std::vector<float> v);

    std::size_t size() const noexcept { return values.size(); }
    int dim(std::size_t axis) const { return shape.at(axis); }
    std::size_t rank() const noexcept { return shape.size(); }

    float* data() noexcept { return values.data(); }
    const float* data() const noexcept { return values.data(); }

    /// Element of a rank-3 [C, H, W] tensor.
    float& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    float at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    Eigen::Map<Eigen::VectorXf> flat() { return {values.data(), static_cast<Eigen::Index>(values.size())}; }
    Eigen::Map<const Eigen::VectorXf> flat() const {
        return {values.data(), static_cast<Eigen::Index>(values.size())};
    }

    bool operator==(const Tensor&) const = default;
};

} // namespace texbench
