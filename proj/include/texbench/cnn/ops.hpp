#pragma once

#include <span>

#include "texbench/cnn/tensor.hpp"

namespace texbench {

struct ConvParams {
    int stride_h = 1, stride_w = 1;
    int pad_h = 0, pad_w = 0;
    int groups = 1;
};

struct PoolParams {
    int kernel_h = 2, kernel_w = 2;
    int stride_h = 2, stride_w = 2;
    int pad_h = 0, pad_w = 0;
};

struct LrnParams {
    int local_size = 5;
    float alpha = 1e-4F;
    float beta = 0.75F;
    float k = 1.0F;
};

/// floor((in + 2 pad - kernel) / stride) + 1; throws if the kernel does not fit.
int conv_output_size(int in, int kernel, int stride, int pad, const char* axis);

/// Ceil-mode pooled size: the last window must start inside the image or
/// its left padding.
int pool_output_size(int in, int kernel, int stride, int pad, const char* axis);

/// Cross-correlation (no kernel flip) of a [C, H, W] input with an
/// [O, C/groups, kh, kw] kernel and [O] bias, zero padding.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, const ConvParams& p);

Tensor relu(const Tensor& input);
void relu_inplace(Tensor& t);

/// Across-channel local response normalization of a [C, H, W] tensor:
/// b_c = a_c / (k + alpha/n * sum_{window(c)} a^2)^beta, window clipped at the ends.
Tensor lrn(const Tensor& input, const LrnParams& p);

/// Padding never wins the max.
Tensor maxpool(const Tensor& input, const PoolParams& p);
/// Sums in-bounds values and always divides by kernel_h * kernel_w.
Tensor avgpool(const Tensor& input, const PoolParams& p);

/// y = W x + b with W [out, in] and x flattened.
Tensor fully_connected(const Tensor& input, const Tensor& matrix, const Tensor& bias);

/// Over all values, shape kept. Max-subtracted for stability.
Tensor softmax(const Tensor& input);

Tensor concat(std::span<const Tensor* const> inputs, int axis);

} // namespace texbench
