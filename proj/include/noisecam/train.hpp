#pragma once

#include <cstdint>
#include <vector>

#include "noisecam/dataset.hpp"
#include "noisecam/model.hpp"

namespace ncam {

struct TrainConfig {
  int epochs = 12;
  float lr = 0.02f;
  int batch = 16;
  std::uint64_t seed = 7;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;      // mean cross-entropy over the epoch's minibatches
  double accuracy = 0.0;  // running accuracy during the epoch
};

struct TrainResult {
  ModelWeights model;
  std::vector<EpochStats> history;
};

/// Plain minibatch SGD on softmax cross-entropy. Single-threaded batch order,
/// bit-reproducible for a given (model, data, config).
TrainResult train(ModelWeights model, const LabeledImages& data, const TrainConfig& cfg);

struct Prediction {
  int label = 0;
  std::vector<double> scores;  // softmax probabilities
};

/// Rejects images with pixels outside [0, 1].
Prediction predict(const ModelWeights& model, const Tensor& image);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const ModelWeights& model, const LabeledImages& data);

}  // namespace ncam
