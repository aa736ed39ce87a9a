#include "noisecam/network.hpp"

#include <algorithm>
#include <stdexcept>

#include "noisecam/kernels.hpp"

namespace ncam {

Tape forward(const ModelWeights& model, const Tensor& input) {
  if (input.shape() != model.input_shape) {
    throw ShapeError("model expects input " + to_string(model.input_shape) + ", got " + to_string(input.shape()));
  }
  Tape tape;
  tape.input = input;
  tape.records.reserve(model.layers.size());
  const Tensor* cur = &tape.input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    LayerRecord rec;
    rec.layer = i;
    switch (l.kind) {
      case LayerKind::Conv:
        rec.pre = conv2d(*cur, model.weights[i], l.stride, l.padding, model.biases[i].data());
        break;
      case LayerKind::Dense:
        rec.pre = dense(*cur, model.weights[i], model.biases[i]);
        break;
      case LayerKind::MaxPool: {
        auto p = maxpool2d(*cur, l.window, l.stride);
        rec.post = std::move(p.output);
        rec.argmax = std::move(p.argmax);
        break;
      }
      case LayerKind::Flatten:
        rec.post = cur->reshaped({cur->size()});
        break;
    }
    if (l.has_params()) {
      if (!rec.pre.all_finite()) throw NumericError("forward pass produced non-finite values at " + l.id);
      rec.post = l.activation == Activation::Relu ? relu(rec.pre) : rec.pre;
    }
    tape.records.push_back(std::move(rec));
    cur = &tape.records.back().post;
  }
  return tape;
}

ParamGrads ParamGrads::zeros_like(const ModelWeights& model) {
  ParamGrads g;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    g.weights.emplace_back(model.weights[i].shape());
    g.biases.emplace_back(model.biases[i].shape());
  }
  return g;
}

void ParamGrads::clear() {
  for (auto& t : weights) std::fill(t.data().begin(), t.data().end(), 0.0f);
  for (auto& t : biases) std::fill(t.data().begin(), t.data().end(), 0.0f);
}

Gradients backward(const ModelWeights& model, const Tape& tape, const BackwardRequest& request) {
  const std::size_t n = model.layers.size();
  if (tape.records.size() != n) throw std::invalid_argument("backward: incomplete tape");
  if (request.logit_grad.shape() != tape.logits().shape()) {
    throw ShapeError("backward: logit gradient " + to_string(request.logit_grad.shape()) + " vs logits " +
                     to_string(tape.logits().shape()));
  }
  for (const auto& [layer, seed] : request.activation_seeds) {
    if (layer >= n) throw std::out_of_range("backward: seed layer out of range");
    require_same_shape(seed, tape.records[layer].post, "backward seed");
  }
  if (request.stop_at && *request.stop_at >= n) throw std::out_of_range("backward: stop layer out of range");

  // Parameter gradients need the full descent, so stop_at only applies without them.
  const bool full = !request.stop_at || request.params;
  Gradients out;
  out.activations.resize(n);
  Tensor grad = request.logit_grad;
  for (std::size_t step = n; step-- > 0;) {
    for (const auto& [layer, seed] : request.activation_seeds)
      if (layer == step) grad = grad + seed;
    out.activations[step] = grad;
    if (!full && step == *request.stop_at) return out;

    const auto& l = model.layers[step];
    const auto& rec = tape.records[step];
    const Tensor& layer_in = step == 0 ? tape.input : tape.records[step - 1].post;
    switch (l.kind) {
      case LayerKind::Conv: {
        Tensor g_pre = l.activation == Activation::Relu ? relu_backward(grad, rec.pre) : grad;
        if (request.params)
          conv2d_backward_params(layer_in, g_pre, l.stride, l.padding, request.params->weights[step],
                                 request.params->biases[step]);
        grad = conv2d_backward_input(g_pre, model.weights[step], layer_in.shape(), l.stride, l.padding);
        break;
      }
      case LayerKind::Dense: {
        Tensor g_pre = l.activation == Activation::Relu ? relu_backward(grad, rec.pre) : grad;
        if (request.params)
          dense_backward_params(layer_in, g_pre, request.params->weights[step], request.params->biases[step]);
        grad = dense_backward_input(g_pre, model.weights[step], layer_in.shape());
        break;
      }
      case LayerKind::MaxPool:
        grad = maxpool2d_backward(grad, rec.argmax, layer_in.shape());
        break;
      case LayerKind::Flatten:
        grad = grad.reshaped(layer_in.shape());
        break;
    }
  }
  out.input = std::move(grad);
  return out;
}

namespace {

Tensor one_hot_logit(const ModelWeights& model, const Tape& tape, int category) {
  if (category < 0 || category >= model.num_classes) {
    throw std::out_of_range("category " + std::to_string(category) + " outside [0, " +
                            std::to_string(model.num_classes) + ")");
  }
  Tensor g(tape.logits().shape());
  g[static_cast<std::size_t>(category)] = 1.0f;
  return g;
}

}  // namespace

ScoreGradients backward_score(const ModelWeights& model, const Tape& tape, int category) {
  BackwardRequest req{one_hot_logit(model, tape, category), {}, std::nullopt, nullptr};
  auto g = backward(model, tape, req);
  ScoreGradients out;
  out.input = std::move(g.input);
  for (auto i : model.conv_layers())
    out.fields.push_back({model.layers[i].id, i, std::move(g.activations[i]), category});
  return out;
}

GradientField backward_score_at(const ModelWeights& model, const Tape& tape, int category, std::size_t layer) {
  BackwardRequest req{one_hot_logit(model, tape, category), {}, layer, nullptr};
  auto g = backward(model, tape, req);
  return {model.layers.at(layer).id, layer, std::move(g.activations[layer]), category};
}

int argmax(std::span<const float> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace ncam
