#include "noisecam/cam.hpp"

#include <algorithm>
#include <cmath>

namespace ncam {

std::string_view to_string(CamVariant v) {
  switch (v) {
    case CamVariant::GradCam: return "gradcam";
    case CamVariant::GradCamPP: return "gradcampp";
    case CamVariant::LayerCam: return "layercam";
    case CamVariant::NoiseCam: return "noisecam";
  }
  return "?";
}

Tensor upsample_bilinear(const Tensor& map, std::size_t height, std::size_t width) {
  if (map.rank() != 2 || map.dim(0) < 1 || map.dim(1) < 1)
    throw ShapeError("upsample_bilinear expects a non-empty h x w map, got " + to_string(map.shape()));
  const std::size_t h = map.dim(0), w = map.dim(1);
  if (h == height && w == width) return map;
  Tensor out({height, width});
  const double ry = height > 1 ? double(h - 1) / double(height - 1) : 0.0;
  const double rx = width > 1 ? double(w - 1) / double(width - 1) : 0.0;
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = double(y) * ry;
    const auto y0 = std::min(static_cast<std::size_t>(sy), h - 1);
    const auto y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - double(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = double(x) * rx;
      const auto x0 = std::min(static_cast<std::size_t>(sx), w - 1);
      const auto x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - double(x0);
      const double top = (1 - fx) * map[y0 * w + x0] + fx * map[y0 * w + x1];
      const double bottom = (1 - fx) * map[y1 * w + x0] + fx * map[y1 * w + x1];
      out[y * width + x] = static_cast<float>((1 - fy) * top + fy * bottom);
    }
  }
  return out;
}

Tensor normalize_minmax(const Tensor& map) {
  if (map.empty()) return map;
  auto [lo_it, hi_it] = std::minmax_element(map.data().begin(), map.data().end());
  const float lo = *lo_it, hi = *hi_it;
  Tensor out(map.shape());
  if (hi > lo) {
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = (map[i] - lo) / (hi - lo);
  } else if (hi > 0.0f) {
    std::fill(out.data().begin(), out.data().end(), 1.0f);
  }
  return out;
}

namespace cam {

namespace {

void check_pair(const Tensor& a, const Tensor& g) {
  if (a.rank() != 3) throw ShapeError("CAM expects h x w x K activations, got " + to_string(a.shape()));
  require_same_shape(a, g, "CAM activations/gradients");
}

Tensor relu_sum(const Tensor& a, const Tensor& weights) {
  const std::size_t h = a.dim(0), w = a.dim(1), K = a.dim(2);
  Tensor out({h, w});
  for (std::size_t p = 0; p < h * w; ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) acc += double(weights[p * K + k]) * a[p * K + k];
    out[p] = acc > 0.0 ? static_cast<float>(acc) : 0.0f;
  }
  return out;
}

}  // namespace

Tensor gradcam(const Tensor& activations, const Tensor& grads) {
  check_pair(activations, grads);
  const std::size_t hw = activations.dim(0) * activations.dim(1), K = activations.dim(2);
  std::vector<double> weights(K, 0.0);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t k = 0; k < K; ++k) weights[k] += grads[p * K + k];
  for (auto& v : weights) v /= double(hw);
  return weighted_sum(activations, weights);
}

CamWeights gradcampp_weights(const Tensor& activations, const Tensor& grads) {
  check_pair(activations, grads);
  const std::size_t hw = activations.dim(0) * activations.dim(1), K = activations.dim(2);
  std::vector<double> mass(K, 0.0);
  for (std::size_t p = 0; p < hw; ++p)
    for (std::size_t k = 0; k < K; ++k) mass[k] += activations[p * K + k];

  CamWeights cw;
  cw.coefficients = Tensor(activations.shape());
  cw.channel_weights.assign(K, 0.0);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t k = 0; k < K; ++k) {
      const double g = grads[p * K + k];
      const double g2 = g * g;
      const double denom = 2.0 * g2 + mass[k] * g2 * g;
      const double a = (g == 0.0 || denom == 0.0) ? 0.0 : g2 / denom;
      cw.coefficients[p * K + k] = static_cast<float>(a);
      cw.channel_weights[k] += a * std::max(g, 0.0);
    }
  }
  return cw;
}

Tensor weighted_sum(const Tensor& activations, const std::vector<double>& channel_weights) {
  if (activations.rank() != 3 || channel_weights.size() != activations.dim(2))
    throw ShapeError("weighted_sum: channel weight count does not match " + to_string(activations.shape()));
  const std::size_t hw = activations.dim(0) * activations.dim(1), K = activations.dim(2);
  Tensor out({activations.dim(0), activations.dim(1)});
  for (std::size_t p = 0; p < hw; ++p) {
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) acc += channel_weights[k] * activations[p * K + k];
    out[p] = acc > 0.0 ? static_cast<float>(acc) : 0.0f;
  }
  return out;
}

Tensor layercam(const Tensor& activations, const Tensor& grads) {
  check_pair(activations, grads);
  Tensor w(grads.shape());
  for (std::size_t i = 0; i < grads.size(); ++i) w[i] = std::max(grads[i], 0.0f);
  return relu_sum(activations, w);
}

CamWeights noisecam_weights(const Tensor& activations, const Tensor& grads) {
  CamWeights cw = gradcampp_weights(activations, grads);
  const std::size_t hw = activations.dim(0) * activations.dim(1), K = activations.dim(2);
  cw.pixel_weights = Tensor(activations.shape());
  cw.global_weights = Tensor(activations.shape());
  cw.noise_weights = Tensor(activations.shape());
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t i = p * K + k;
      const float pixel = std::max(grads[i], 0.0f);
      const float global = static_cast<float>(cw.channel_weights[k]);
      cw.pixel_weights[i] = pixel;
      cw.global_weights[i] = global;
      cw.noise_weights[i] = global - pixel;
    }
  }
  return cw;
}

Tensor noisecam(const Tensor& activations, const CamWeights& weights) {
  require_same_shape(activations, weights.noise_weights, "NoiseCAM weights");
  return relu_sum(activations, weights.noise_weights);
}

}  // namespace cam

namespace {

struct Probe {
  std::size_t layer;
  int category;
  Tensor activations;
  Tensor grads;
};

Probe probe(const ModelWeights& model, const Tensor& image, std::string_view layer_id, std::optional<int> category) {
  const auto layer = model.conv_layer_index(layer_id);
  Tape tape = forward(model, image);
  const int c = category.value_or(argmax(tape.logits().data()));
  auto field = backward_score_at(model, tape, c, layer);
  return {layer, c, std::move(tape.records[layer].post), std::move(field.grad)};
}

Heatmap finish(const ModelWeights& model, const Tensor& map, const Probe& p, CamVariant v, Normalize n) {
  Tensor up = upsample_bilinear(map, model.input_shape[0], model.input_shape[1]);
  if (n == Normalize::Yes) up = normalize_minmax(up);
  return {std::move(up), model.layers[p.layer].id, p.category, v};
}

}  // namespace

Heatmap gradcam(const ModelWeights& model, const Tensor& image, std::string_view layer_id, int category,
                Normalize normalize) {
  const Probe p = probe(model, image, layer_id, category);
  return finish(model, cam::gradcam(p.activations, p.grads), p, CamVariant::GradCam, normalize);
}

std::pair<Heatmap, CamWeights> gradcam_pp(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                                          int category) {
  const Probe p = probe(model, image, layer_id, category);
  CamWeights w = cam::gradcampp_weights(p.activations, p.grads);
  Heatmap h = finish(model, cam::weighted_sum(p.activations, w.channel_weights), p, CamVariant::GradCamPP,
                     Normalize::Yes);
  return {std::move(h), std::move(w)};
}

std::pair<Heatmap, CamWeights> layercam(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                                        int category) {
  const Probe p = probe(model, image, layer_id, category);
  CamWeights w;
  w.pixel_weights = Tensor(p.grads.shape());
  for (std::size_t i = 0; i < p.grads.size(); ++i) w.pixel_weights[i] = std::max(p.grads[i], 0.0f);
  Heatmap h = finish(model, cam::layercam(p.activations, p.grads), p, CamVariant::LayerCam, Normalize::Yes);
  return {std::move(h), std::move(w)};
}

Heatmap noisecam(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                 std::optional<int> category) {
  const Probe p = probe(model, image, layer_id, category);
  const CamWeights w = cam::noisecam_weights(p.activations, p.grads);
  return finish(model, cam::noisecam(p.activations, w), p, CamVariant::NoiseCam, Normalize::No);
}

std::vector<Heatmap> gradcam_all_layers(const ModelWeights& model, const Tensor& image, int category,
                                        Normalize normalize) {
  const Tape tape = forward(model, image);
  auto grads = backward_score(model, tape, category);
  std::vector<Heatmap> out;
  for (auto& f : grads.fields) {
    const Probe p{f.layer, category, tape.records[f.layer].post, std::move(f.grad)};
    out.push_back(finish(model, cam::gradcam(p.activations, p.grads), p, CamVariant::GradCam, normalize));
  }
  return out;
}

CamBundle cam_bundle(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                     std::optional<int> category) {
  const Probe p = probe(model, image, layer_id, category);
  CamBundle b;
  b.weights = cam::noisecam_weights(p.activations, p.grads);
  b.gradcampp = finish(model, cam::weighted_sum(p.activations, b.weights.channel_weights), p, CamVariant::GradCamPP,
                       Normalize::Yes);
  b.layercam = finish(model, cam::layercam(p.activations, p.grads), p, CamVariant::LayerCam, Normalize::Yes);
  b.noisecam = finish(model, cam::noisecam(p.activations, b.weights), p, CamVariant::NoiseCam, Normalize::No);
  return b;
}

}  // namespace ncam
