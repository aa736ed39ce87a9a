#pragma once

// OpenMP-parallel layer kernels. Layouts: activations H x W x C, conv kernels
// Kh x Kw x C x F, dense weights In x Out. Convolution is cross-correlation
// (no kernel flip). Serial loop-nest references live in reference.hpp.

#include <cstdint>
#include <span>
#include <vector>

#include "noisecam/tensor.hpp"

namespace ncam {

Shape conv2d_output_shape(const Shape& input, const Shape& kernels, int stride, int padding);

/// `bias` may be empty; otherwise it has one entry per output channel.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding, std::span<const float> bias = {});

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels, const Shape& input_shape, int stride,
                             int padding);

/// Accumulates (+=) into grad_kernels and grad_bias.
void conv2d_backward_params(const Tensor& input, const Tensor& grad_out, int stride, int padding,
                            Tensor& grad_kernels, Tensor& grad_bias);

struct PoolResult {
  Tensor output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// Ties resolve to the first maximum in row-major window order.
PoolResult maxpool2d(const Tensor& input, int window, int stride);
Tensor maxpool2d_backward(const Tensor& grad_out, std::span<const std::uint32_t> argmax, const Shape& input_shape);

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias);
Tensor dense_backward_input(const Tensor& grad_out, const Tensor& weights, const Shape& input_shape);
void dense_backward_params(const Tensor& x, const Tensor& grad_out, Tensor& grad_weights, Tensor& grad_bias);

Tensor relu(const Tensor& x);
/// Gradient is zero where pre <= 0.
Tensor relu_backward(const Tensor& grad_post, const Tensor& pre);

std::vector<double> softmax(std::span<const float> logits);

}  // namespace ncam
