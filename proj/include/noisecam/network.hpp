#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "noisecam/model.hpp"

namespace ncam {

struct LayerRecord {
  std::size_t layer = 0;
  Tensor pre;   // linear output before the fused activation (conv/dense only)
  Tensor post;  // layer output as seen by the next layer
  std::vector<std::uint32_t> argmax;  // pooling routes
};

/// Everything a forward pass produced, in execution order.
struct Tape {
  Tensor input;
  std::vector<LayerRecord> records;

  const Tensor& logits() const { return records.back().post; }
  const Tensor& activation(std::size_t layer) const { return records.at(layer).post; }
};

/// Throws ShapeError on an input of the wrong shape and NumericError on
/// non-finite logits.
Tape forward(const ModelWeights& model, const Tensor& input);

/// Parameter gradient accumulators laid out like ModelWeights.
struct ParamGrads {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static ParamGrads zeros_like(const ModelWeights& model);
  void clear();
};

struct BackwardRequest {
  Tensor logit_grad;
  /// Extra upstream gradient added to a layer's post-activation output.
  std::vector<std::pair<std::size_t, Tensor>> activation_seeds;
  /// Stop once the gradient at this layer's output is known. Skips the input gradient.
  std::optional<std::size_t> stop_at;
  /// When set, parameter gradients are accumulated here.
  ParamGrads* params = nullptr;
};

struct Gradients {
  Tensor input;                      // empty when stopped early
  std::vector<Tensor> activations;   // d/d(post output) per layer; empty below stop_at
};

Gradients backward(const ModelWeights& model, const Tape& tape, const BackwardRequest& request);

/// Gradient of one class score with respect to a conv layer's feature maps.
struct GradientField {
  std::string layer_id;
  std::size_t layer = 0;
  Tensor grad;
  int category = 0;
};

struct ScoreGradients {
  Tensor input;
  std::vector<GradientField> fields;  // one per conv layer, forward order
};

/// Gradients of the pre-softmax score y^category. Throws std::out_of_range for
/// an invalid category.
ScoreGradients backward_score(const ModelWeights& model, const Tape& tape, int category);

/// Same, but stops at `layer`; only that layer's field is returned.
GradientField backward_score_at(const ModelWeights& model, const Tape& tape, int category, std::size_t layer);

int argmax(std::span<const float> values);

}  // namespace ncam
