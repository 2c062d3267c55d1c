#include "texbench/cnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "texbench/error.hpp"

namespace texbench {

namespace {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_chw(const Tensor& t, const char* op) {
    if (t.rank() != 3) throw ShapeError(std::string(op) + " expects a [C, H, W] input, got " + shape_to_string(t.shape));
}

} // namespace

int conv_output_size(int in, int kernel, int stride, int pad, const char* axis) {
    if (kernel < 1 || stride < 1 || pad < 0)
        throw ShapeError(std::string("invalid kernel/stride/pad along ") + axis);
    if (in + 2 * pad < kernel)
        throw ShapeError(std::string("kernel ") + std::to_string(kernel) + " does not fit " + axis + " " +
                         std::to_string(in) + " with pad " + std::to_string(pad));
    return (in + 2 * pad - kernel) / stride + 1;
}

int pool_output_size(int in, int kernel, int stride, int pad, const char* axis) {
    if (kernel < 1 || stride < 1 || pad < 0)
        throw ShapeError(std::string("invalid pooling kernel/stride/pad along ") + axis);
    if (pad >= kernel) throw ShapeError(std::string("pooling pad must be smaller than the kernel along ") + axis);
    if (in + 2 * pad < kernel)
        throw ShapeError(std::string("pooling kernel ") + std::to_string(kernel) + " does not fit " + axis + " " +
                         std::to_string(in));
    int out = (in + 2 * pad - kernel + stride - 1) / stride + 1;
    if ((out - 1) * stride >= in + pad) --out;
    return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const ConvParams& p) {
    require_chw(input, "conv2d");
    if (kernel.rank() != 4) throw ShapeError("conv2d kernel must be [O, C/groups, kh, kw], got " + shape_to_string(kernel.shape));
    const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const int O = kernel.dim(0), Cg = kernel.dim(1), KH = kernel.dim(2), KW = kernel.dim(3);
    if (p.groups < 1 || C % p.groups != 0)
        throw ShapeError("conv2d input channels " + std::to_string(C) + " not divisible by groups " + std::to_string(p.groups));
    if (O % p.groups != 0)
        throw ShapeError("conv2d output channels " + std::to_string(O) + " not divisible by groups " + std::to_string(p.groups));
    if (Cg != C / p.groups)
        throw ShapeError("conv2d kernel expects " + std::to_string(Cg) + " channels per group, input has " +
                         std::to_string(C / p.groups));
    if (bias.size() != static_cast<std::size_t>(O))
        throw ShapeError("conv2d bias length " + std::to_string(bias.size()) + " != output channels " + std::to_string(O));
    const int OH = conv_output_size(H, KH, p.stride_h, p.pad_h, "height");
    const int OW = conv_output_size(W, KW, p.stride_w, p.pad_w, "width");

    Tensor out({O, OH, OW});
    const int Og = O / p.groups;
    const Eigen::Index patch = static_cast<Eigen::Index>(Cg) * KH * KW;
    const Eigen::Index spatial = static_cast<Eigen::Index>(OH) * OW;
    MatrixRM cols(patch, spatial);
    for (int g = 0; g < p.groups; ++g) {
        // im2col for this group's channels
        for (int c = 0; c < Cg; ++c)
            for (int ky = 0; ky < KH; ++ky)
                for (int kx = 0; kx < KW; ++kx) {
                    float* row = cols.row((static_cast<Eigen::Index>(c) * KH + ky) * KW + kx).data();
                    const int ch = g * Cg + c;
                    for (int oy = 0; oy < OH; ++oy) {
                        const int iy = oy * p.stride_h - p.pad_h + ky;
                        for (int ox = 0; ox < OW; ++ox) {
                            const int ix = ox * p.stride_w - p.pad_w + kx;
                            row[oy * OW + ox] = (iy >= 0 && iy < H && ix >= 0 && ix < W) ? input.at(ch, iy, ix) : 0.0F;
                        }
                    }
                }
        Eigen::Map<const MatrixRM> wmat(kernel.data() + static_cast<std::size_t>(g) * Og * patch, Og, patch);
        Eigen::Map<MatrixRM> omat(out.data() + static_cast<std::size_t>(g) * Og * spatial, Og, spatial);
        omat.noalias() = wmat * cols;
        for (int o = 0; o < Og; ++o) omat.row(o).array() += bias.values[static_cast<std::size_t>(g * Og + o)];
    }
    return out;
}

void relu_inplace(Tensor& t) {
    for (float& v : t.values) v = std::max(v, 0.0F);
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    relu_inplace(out);
    return out;
}

Tensor lrn(const Tensor& input, const LrnParams& p) {
    require_chw(input, "lrn");
    if (p.local_size < 1 || p.local_size % 2 == 0)
        throw Error("lrn local_size must be a positive odd number, got " + std::to_string(p.local_size));
    const int C = input.dim(0);
    const std::size_t plane = static_cast<std::size_t>(input.dim(1)) * input.dim(2);
    const int half = p.local_size / 2;
    const float scale = p.alpha / static_cast<float>(p.local_size);
    Tensor out(input.shape);
    std::vector<float> sum(plane);
    for (int c = 0; c < C; ++c) {
        std::fill(sum.begin(), sum.end(), 0.0F);
        for (int cc = std::max(0, c - half); cc <= std::min(C - 1, c + half); ++cc) {
            const float* a = input.data() + cc * plane;
            for (std::size_t i = 0; i < plane; ++i) sum[i] += a[i] * a[i];
        }
        const float* a = input.data() + c * plane;
        float* b = out.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) b[i] = a[i] / std::pow(p.k + scale * sum[i], p.beta);
    }
    return out;
}

namespace {

template <bool Max>
Tensor pool(const Tensor& input, const PoolParams& p) {
    require_chw(input, Max ? "maxpool" : "avgpool");
    const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const int OH = pool_output_size(H, p.kernel_h, p.stride_h, p.pad_h, "height");
    const int OW = pool_output_size(W, p.kernel_w, p.stride_w, p.pad_w, "width");
    const float area = static_cast<float>(p.kernel_h * p.kernel_w);
    Tensor out({C, OH, OW});
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < OH; ++oy) {
            const int y0 = oy * p.stride_h - p.pad_h;
            const int ya = std::max(y0, 0), yb = std::min(y0 + p.kernel_h, H);
            for (int ox = 0; ox < OW; ++ox) {
                const int x0 = ox * p.stride_w - p.pad_w;
                const int xa = std::max(x0, 0), xb = std::min(x0 + p.kernel_w, W);
                if (ya >= yb || xa >= xb) throw ShapeError("pooling window lies entirely in padding");
                float acc = Max ? -std::numeric_limits<float>::infinity() : 0.0F;
                for (int y = ya; y < yb; ++y)
                    for (int x = xa; x < xb; ++x) {
                        if constexpr (Max) acc = std::max(acc, input.at(c, y, x));
                        else acc += input.at(c, y, x);
                    }
                out.at(c, oy, ox) = Max ? acc : acc / area;
            }
        }
    return out;
}

} // namespace

Tensor maxpool(const Tensor& input, const PoolParams& p) { return pool<true>(input, p); }
Tensor avgpool(const Tensor& input, const PoolParams& p) { return pool<false>(input, p); }

Tensor fully_connected(const Tensor& input, const Tensor& matrix, const Tensor& bias) {
    if (matrix.rank() != 2) throw ShapeError("fully_connected matrix must be [out, in], got " + shape_to_string(matrix.shape));
    const int out_n = matrix.dim(0), in_n = matrix.dim(1);
    if (input.size() != static_cast<std::size_t>(in_n))
        throw ShapeError("fully_connected input length " + std::to_string(input.size()) + " != matrix columns " +
                         std::to_string(in_n));
    if (bias.size() != static_cast<std::size_t>(out_n))
        throw ShapeError("fully_connected bias length " + std::to_string(bias.size()) + " != rows " + std::to_string(out_n));
    Tensor out({out_n});
    Eigen::Map<const MatrixRM> w(matrix.data(), out_n, in_n);
    // Long rows (fc6 has 9216 inputs) lose too much in float accumulation.
    const Eigen::VectorXd x = input.flat().cast<double>();
    for (int o = 0; o < out_n; ++o)
        out.values[static_cast<std::size_t>(o)] =
            static_cast<float>(w.row(o).cast<double>().dot(x.transpose()) + bias.values[static_cast<std::size_t>(o)]);
    return out;
}

Tensor softmax(const Tensor& input) {
    if (input.size() == 0) throw ShapeError("softmax of an empty tensor");
    Tensor out = input;
    const float m = *std::max_element(out.values.begin(), out.values.end());
    double sum = 0.0;
    for (float& v : out.values) {
        v = std::exp(v - m);
        sum += v;
    }
    const auto inv = static_cast<float>(1.0 / sum);
    for (float& v : out.values) v *= inv;
    return out;
}

Tensor concat(std::span<const Tensor* const> inputs, int axis) {
    if (inputs.empty()) throw ShapeError("concat of zero tensors");
    const Shape& first = inputs[0]->shape;
    if (axis < 0 || static_cast<std::size_t>(axis) >= first.size())
        throw ShapeError("concat axis " + std::to_string(axis) + " out of range for " + shape_to_string(first));
    Shape shape = first;
    shape[axis] = 0;
    for (const Tensor* t : inputs) {
        bool ok = t->shape.size() == first.size();
        for (std::size_t d = 0; ok && d < first.size(); ++d)
            if (static_cast<int>(d) != axis && t->shape[d] != first[d]) ok = false;
        if (!ok)
            throw ShapeError("concat inputs disagree: " + shape_to_string(first) + " vs " + shape_to_string(t->shape));
        shape[axis] += t->shape[axis];
    }
    std::size_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= static_cast<std::size_t>(first[d]);
    for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= static_cast<std::size_t>(first[d]);

    Tensor out(shape);
    float* dst = out.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (const Tensor* t : inputs) {
            const std::size_t chunk = static_cast<std::size_t>(t->shape[axis]) * inner;
            std::copy_n(t->data() + o * chunk, chunk, dst);
            dst += chunk;
        }
    return out;
}

} // namespace texbench
