#pragma once

// Serial loop-nest implementations of the layer kernels. Slow and obvious on
// purpose; the tests and the benchmark compare the parallel kernels against them.

#include "noisecam/kernels.hpp"

namespace ncam::reference {

/// Six nested loops, double accumulation, no bias.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding);

/// Scatter form of the input gradient.
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels, const Shape& input_shape, int stride,
                             int padding);

Tensor conv2d_backward_kernels(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape, int stride,
                               int padding);

PoolResult maxpool2d(const Tensor& input, int window, int stride);

}  // namespace ncam::reference
