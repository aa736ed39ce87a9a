#include "noisecam/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ncam {

Shape conv2d_output_shape(const Shape& input, const Shape& kernels, int stride, int padding) {
  if (input.size() != 3 || kernels.size() != 4) {
    throw ShapeError("conv2d expects HxWxC input and KhxKwxCxF kernels, got " + to_string(input) + " and " +
                     to_string(kernels));
  }
  if (kernels[2] != input[2]) {
    throw ShapeError("conv2d channel mismatch: input " + to_string(input) + " vs kernels " + to_string(kernels));
  }
  if (stride < 1 || padding < 0) throw ShapeError("conv2d needs stride >= 1 and padding >= 0");
  const auto padded_h = input[0] + 2 * static_cast<std::size_t>(padding);
  const auto padded_w = input[1] + 2 * static_cast<std::size_t>(padding);
  if (padded_h < kernels[0] || padded_w < kernels[1]) {
    throw ShapeError("conv2d kernel " + to_string(kernels) + " larger than padded input " + to_string(input));
  }
  const auto s = static_cast<std::size_t>(stride);
  return {(padded_h - kernels[0]) / s + 1, (padded_w - kernels[1]) / s + 1, kernels[3]};
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding, std::span<const float> bias) {
  const Shape out_shape = conv2d_output_shape(input.shape(), kernels.shape(), stride, padding);
  const long H = static_cast<long>(input.dim(0)), W = static_cast<long>(input.dim(1));
  const long C = static_cast<long>(input.dim(2));
  const long Kh = static_cast<long>(kernels.dim(0)), Kw = static_cast<long>(kernels.dim(1));
  const long F = static_cast<long>(kernels.dim(3));
  const long OH = static_cast<long>(out_shape[0]), OW = static_cast<long>(out_shape[1]);
  if (!bias.empty() && static_cast<long>(bias.size()) != F) {
    throw ShapeError("conv2d bias has " + std::to_string(bias.size()) + " entries for " + std::to_string(F) +
                     " filters");
  }

  Tensor out(out_shape);
  const float* in = input.data().data();
  const float* k = kernels.data().data();
  float* o_base = out.data().data();

#pragma omp parallel for schedule(static)
  for (long oy = 0; oy < OH; ++oy) {
    for (long ox = 0; ox < OW; ++ox) {
      float* o = o_base + (oy * OW + ox) * F;
      if (!bias.empty()) std::copy(bias.begin(), bias.end(), o);
      for (long ky = 0; ky < Kh; ++ky) {
        const long iy = oy * stride - padding + ky;
        if (iy < 0 || iy >= H) continue;
        for (long kx = 0; kx < Kw; ++kx) {
          const long ix = ox * stride - padding + kx;
          if (ix < 0 || ix >= W) continue;
          const float* px = in + (iy * W + ix) * C;
          const float* kp = k + (ky * Kw + kx) * C * F;
          for (long c = 0; c < C; ++c) {
            const float v = px[c];
            const float* kr = kp + c * F;
            for (long f = 0; f < F; ++f) o[f] += v * kr[f];
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernels, const Shape& input_shape, int stride,
                             int padding) {
  const Shape expect = conv2d_output_shape(input_shape, kernels.shape(), stride, padding);
  if (grad_out.shape() != expect) {
    throw ShapeError("conv2d backward: gradient " + to_string(grad_out.shape()) + " vs expected " + to_string(expect));
  }
  const long H = static_cast<long>(input_shape[0]), W = static_cast<long>(input_shape[1]);
  const long C = static_cast<long>(input_shape[2]);
  const long Kh = static_cast<long>(kernels.dim(0)), Kw = static_cast<long>(kernels.dim(1));
  const long F = static_cast<long>(kernels.dim(3));
  const long OH = static_cast<long>(expect[0]), OW = static_cast<long>(expect[1]);

  // Kh x Kw x F x C so the inner loop runs over contiguous input channels.
  std::vector<float> kt(static_cast<std::size_t>(Kh * Kw * F * C));
  const float* k = kernels.data().data();
  for (long t = 0; t < Kh * Kw; ++t)
    for (long c = 0; c < C; ++c)
      for (long f = 0; f < F; ++f) kt[(t * F + f) * C + c] = k[(t * C + c) * F + f];

  Tensor grad_in(input_shape);
  const float* g = grad_out.data().data();
  float* gi_base = grad_in.data().data();

#pragma omp parallel for schedule(static)
  for (long iy = 0; iy < H; ++iy) {
    for (long ix = 0; ix < W; ++ix) {
      float* gi = gi_base + (iy * W + ix) * C;
      for (long ky = 0; ky < Kh; ++ky) {
        const long ny = iy + padding - ky;
        if (ny < 0 || ny % stride) continue;
        const long oy = ny / stride;
        if (oy >= OH) continue;
        for (long kx = 0; kx < Kw; ++kx) {
          const long nx = ix + padding - kx;
          if (nx < 0 || nx % stride) continue;
          const long ox = nx / stride;
          if (ox >= OW) continue;
          const float* go = g + (oy * OW + ox) * F;
          const float* kp = kt.data() + (ky * Kw + kx) * F * C;
          for (long f = 0; f < F; ++f) {
            const float gv = go[f];
            if (gv == 0.0f) continue;
            const float* kr = kp + f * C;
            for (long c = 0; c < C; ++c) gi[c] += gv * kr[c];
          }
        }
      }
    }
  }
  return grad_in;
}

void conv2d_backward_params(const Tensor& input, const Tensor& grad_out, int stride, int padding,
                            Tensor& grad_kernels, Tensor& grad_bias) {
  const Shape expect = conv2d_output_shape(input.shape(), grad_kernels.shape(), stride, padding);
  if (grad_out.shape() != expect) {
    throw ShapeError("conv2d param backward: gradient " + to_string(grad_out.shape()) + " vs expected " +
                     to_string(expect));
  }
  const long W = static_cast<long>(input.dim(1)), H = static_cast<long>(input.dim(0));
  const long C = static_cast<long>(input.dim(2));
  const long Kh = static_cast<long>(grad_kernels.dim(0)), Kw = static_cast<long>(grad_kernels.dim(1));
  const long F = static_cast<long>(grad_kernels.dim(3));
  const long OH = static_cast<long>(expect[0]), OW = static_cast<long>(expect[1]);
  if (grad_bias.size() != static_cast<std::size_t>(F)) throw ShapeError("conv2d bias gradient size mismatch");

  const float* in = input.data().data();
  const float* g = grad_out.data().data();
  float* gk = grad_kernels.data().data();

  // One (ky, kx, c) row per iteration: each row is owned by a single thread.
#pragma omp parallel for schedule(static)
  for (long row = 0; row < Kh * Kw * C; ++row) {
    const long c = row % C;
    const long kx = (row / C) % Kw;
    const long ky = row / (C * Kw);
    float* dst = gk + row * F;
    for (long oy = 0; oy < OH; ++oy) {
      const long iy = oy * stride - padding + ky;
      if (iy < 0 || iy >= H) continue;
      for (long ox = 0; ox < OW; ++ox) {
        const long ix = ox * stride - padding + kx;
        if (ix < 0 || ix >= W) continue;
        const float v = in[(iy * W + ix) * C + c];
        if (v == 0.0f) continue;
        const float* go = g + (oy * OW + ox) * F;
        for (long f = 0; f < F; ++f) dst[f] += v * go[f];
      }
    }
  }

  float* gb = grad_bias.data().data();
  for (long p = 0; p < OH * OW; ++p) {
    const float* go = g + p * F;
    for (long f = 0; f < F; ++f) gb[f] += go[f];
  }
}

PoolResult maxpool2d(const Tensor& input, int window, int stride) {
  if (input.rank() != 3) throw ShapeError("maxpool2d expects HxWxC input, got " + to_string(input.shape()));
  if (window < 1 || stride < 1) throw ShapeError("maxpool2d needs window >= 1 and stride >= 1");
  const long H = static_cast<long>(input.dim(0)), W = static_cast<long>(input.dim(1));
  const long C = static_cast<long>(input.dim(2));
  if (window > H || window > W) {
    throw ShapeError("maxpool2d window " + std::to_string(window) + " larger than input " + to_string(input.shape()));
  }
  const long OH = (H - window) / stride + 1, OW = (W - window) / stride + 1;
  PoolResult r{Tensor({static_cast<std::size_t>(OH), static_cast<std::size_t>(OW), static_cast<std::size_t>(C)}),
               std::vector<std::uint32_t>(static_cast<std::size_t>(OH * OW * C))};
  const float* in = input.data().data();
  float* out = r.output.data().data();

#pragma omp parallel for schedule(static)
  for (long oy = 0; oy < OH; ++oy) {
    for (long ox = 0; ox < OW; ++ox) {
      for (long c = 0; c < C; ++c) {
        long best = ((oy * stride) * W + ox * stride) * C + c;
        for (long wy = 0; wy < window; ++wy) {
          for (long wx = 0; wx < window; ++wx) {
            const long idx = ((oy * stride + wy) * W + ox * stride + wx) * C + c;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const long o = (oy * OW + ox) * C + c;
        out[o] = in[best];
        r.argmax[static_cast<std::size_t>(o)] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

Tensor maxpool2d_backward(const Tensor& grad_out, std::span<const std::uint32_t> argmax, const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool2d backward: argmax/gradient size mismatch");
  Tensor grad_in(input_shape);
  // Overlapping windows may route several outputs to one input: keep this serial.
  for (std::size_t i = 0; i < argmax.size(); ++i) grad_in[argmax[i]] += grad_out[i];
  return grad_in;
}

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2 || weights.dim(0) != x.size() || bias.size() != weights.dim(1)) {
    throw ShapeError("dense: input " + to_string(x.shape()) + " incompatible with weights " +
                     to_string(weights.shape()) + " and bias " + to_string(bias.shape()));
  }
  const std::size_t in = weights.dim(0), out_n = weights.dim(1);
  Tensor out({out_n}, std::vector<float>(bias.data().begin(), bias.data().end()));
  float* o = out.data().data();
  const float* w = weights.data().data();
  for (std::size_t i = 0; i < in; ++i) {
    const float v = x[i];
    if (v == 0.0f) continue;
    const float* wr = w + i * out_n;
    for (std::size_t j = 0; j < out_n; ++j) o[j] += v * wr[j];
  }
  return out;
}

Tensor dense_backward_input(const Tensor& grad_out, const Tensor& weights, const Shape& input_shape) {
  const std::size_t in = weights.dim(0), out_n = weights.dim(1);
  if (grad_out.size() != out_n || numel(input_shape) != in) throw ShapeError("dense backward: shape mismatch");
  Tensor grad_in(input_shape);
  const float* w = weights.data().data();
  const float* g = grad_out.data().data();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(in); ++i) {
    const float* wr = w + static_cast<std::size_t>(i) * out_n;
    float acc = 0.0f;
    for (std::size_t j = 0; j < out_n; ++j) acc += g[j] * wr[j];
    grad_in[static_cast<std::size_t>(i)] = acc;
  }
  return grad_in;
}

void dense_backward_params(const Tensor& x, const Tensor& grad_out, Tensor& grad_weights, Tensor& grad_bias) {
  const std::size_t in = grad_weights.dim(0), out_n = grad_weights.dim(1);
  if (x.size() != in || grad_out.size() != out_n || grad_bias.size() != out_n) {
    throw ShapeError("dense param backward: shape mismatch");
  }
  float* gw = grad_weights.data().data();
  const float* g = grad_out.data().data();
  for (std::size_t i = 0; i < in; ++i) {
    const float v = x[i];
    if (v == 0.0f) continue;
    float* row = gw + i * out_n;
    for (std::size_t j = 0; j < out_n; ++j) row[j] += v * g[j];
  }
  for (std::size_t j = 0; j < out_n; ++j) grad_bias[j] += g[j];
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& grad_post, const Tensor& pre) {
  require_same_shape(grad_post, pre, "relu backward");
  Tensor out(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0f ? grad_post[i] : 0.0f;
  return out;
}

std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace ncam
