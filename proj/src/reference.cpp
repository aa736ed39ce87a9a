#include "noisecam/reference.hpp"

#include <vector>

namespace ncam::reference {

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
  const Shape os = conv2d_output_shape(input.shape(), kernels.shape(), stride, padding);
  const long H = long(input.dim(0)), W = long(input.dim(1)), C = long(input.dim(2));
  const long Kh = long(kernels.dim(0)), Kw = long(kernels.dim(1)), F = long(kernels.dim(3));
  Tensor out(os);
  for (long oy = 0; oy < long(os[0]); ++oy)
    for (long ox = 0; ox < long(os[1]); ++ox)
      for (long f = 0; f < F; ++f) {
        double acc = 0.0;
        for (long ky = 0; ky < Kh; ++ky)
          for (long kx = 0; kx < Kw; ++kx)
            for (long c = 0; c < C; ++c) {
              const long iy = oy * stride - padding + ky, ix = ox * stride - padding + kx;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              acc += double(input.at(std::size_t(iy), std::size_t(ix), std::size_t(c))) *
                     double(kernels[std::size_t(((ky * Kw + kx) * C + c) * F + f)]);
            }
        out.at(std::size_t(oy), std::size_t(ox), std::size_t(f)) = float(acc);
      }
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels, const Shape& input_shape, int stride,
                             int padding) {
  const Shape os = conv2d_output_shape(input_shape, kernels.shape(), stride, padding);
  const long H = long(input_shape[0]), W = long(input_shape[1]), C = long(input_shape[2]);
  const long Kh = long(kernels.dim(0)), Kw = long(kernels.dim(1)), F = long(kernels.dim(3));
  std::vector<double> acc(numel(input_shape), 0.0);
  for (long oy = 0; oy < long(os[0]); ++oy)
    for (long ox = 0; ox < long(os[1]); ++ox)
      for (long f = 0; f < F; ++f)
        for (long ky = 0; ky < Kh; ++ky)
          for (long kx = 0; kx < Kw; ++kx)
            for (long c = 0; c < C; ++c) {
              const long iy = oy * stride - padding + ky, ix = ox * stride - padding + kx;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              acc[std::size_t((iy * W + ix) * C + c)] +=
                  double(grad_out.at(std::size_t(oy), std::size_t(ox), std::size_t(f))) *
                  double(kernels[std::size_t(((ky * Kw + kx) * C + c) * F + f)]);
            }
  std::vector<float> v(acc.begin(), acc.end());
  return Tensor(input_shape, std::move(v));
}

Tensor conv2d_backward_kernels(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape, int stride,
                               int padding) {
  const Shape os = conv2d_output_shape(input.shape(), kernel_shape, stride, padding);
  const long H = long(input.dim(0)), W = long(input.dim(1)), C = long(input.dim(2));
  const long Kh = long(kernel_shape[0]), Kw = long(kernel_shape[1]), F = long(kernel_shape[3]);
  std::vector<double> acc(numel(kernel_shape), 0.0);
  for (long oy = 0; oy < long(os[0]); ++oy)
    for (long ox = 0; ox < long(os[1]); ++ox)
      for (long f = 0; f < F; ++f)
        for (long ky = 0; ky < Kh; ++ky)
          for (long kx = 0; kx < Kw; ++kx)
            for (long c = 0; c < C; ++c) {
              const long iy = oy * stride - padding + ky, ix = ox * stride - padding + kx;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              acc[std::size_t(((ky * Kw + kx) * C + c) * F + f)] +=
                  double(input.at(std::size_t(iy), std::size_t(ix), std::size_t(c))) *
                  double(grad_out.at(std::size_t(oy), std::size_t(ox), std::size_t(f)));
            }
  std::vector<float> v(acc.begin(), acc.end());
  return Tensor(kernel_shape, std::move(v));
}

PoolResult maxpool2d(const Tensor& input, int window, int stride) {
  if (input.rank() != 3 || window < 1 || stride < 1 || long(input.dim(0)) < window || long(input.dim(1)) < window) {
    throw ShapeError("reference maxpool2d: bad arguments for " + to_string(input.shape()));
  }
  const long H = long(input.dim(0)), W = long(input.dim(1)), C = long(input.dim(2));
  const long OH = (H - window) / stride + 1, OW = (W - window) / stride + 1;
  PoolResult r{Tensor({std::size_t(OH), std::size_t(OW), std::size_t(C)}), {}};
  r.argmax.resize(r.output.size());
  for (long oy = 0; oy < OH; ++oy)
    for (long ox = 0; ox < OW; ++ox)
      for (long c = 0; c < C; ++c) {
        bool first = true;
        float best = 0.0f;
        long best_idx = 0;
        for (long wy = 0; wy < window; ++wy)
          for (long wx = 0; wx < window; ++wx) {
            const long y = oy * stride + wy, x = ox * stride + wx;
            const float v = input.at(std::size_t(y), std::size_t(x), std::size_t(c));
            if (first || v > best) {
              best = v;
              best_idx = (y * W + x) * C + c;
              first = false;
            }
          }
        r.output.at(std::size_t(oy), std::size_t(ox), std::size_t(c)) = best;
        r.argmax[std::size_t((oy * OW + ox) * C + c)] = std::uint32_t(best_idx);
      }
  return r;
}

}  // namespace ncam::reference
