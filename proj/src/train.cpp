#include "noisecam/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "noisecam/kernels.hpp"
#include "noisecam/network.hpp"

namespace ncam {

namespace {

void check_labels(const ModelWeights& model, const LabeledImages& data) {
  data.check();
  for (int l : data.labels)
    if (l >= model.num_classes)
      throw DataError("label " + std::to_string(l) + " outside model's " + std::to_string(model.num_classes) +
                      " classes");
}

double cross_entropy(const std::vector<double>& p, int label) { return -std::log(std::max(p[label], 1e-300)); }

}  // namespace

TrainResult train(ModelWeights model, const LabeledImages& data, const TrainConfig& cfg) {
  if (data.size() == 0) throw DataError("cannot train on an empty dataset");
  if (cfg.epochs < 0 || cfg.batch < 1 || !(cfg.lr >= 0.0f)) throw ConfigError("invalid training hyperparameters");
  check_labels(model, data);

  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  ParamGrads grads = ParamGrads::zeros_like(model);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      grads.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto idx = order[k];
        const Tape tape = forward(model, data.images[idx]);
        const auto p = softmax(tape.logits().data());
        const int label = data.labels[idx];
        loss_sum += cross_entropy(p, label);
        correct += argmax(tape.logits().data()) == label;
        Tensor dlogits(tape.logits().shape());
        for (std::size_t c = 0; c < p.size(); ++c)
          dlogits[c] = static_cast<float>(p[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
        BackwardRequest req{std::move(dlogits), {}, std::nullopt, &grads};
        backward(model, tape, req);
      }
      const float step = cfg.lr / static_cast<float>(end - start);
      for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (!model.layers[i].has_params()) continue;
        auto w = model.weights[i].data();
        auto gw = grads.weights[i].data();
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * gw[j];
        auto b = model.biases[i].data();
        auto gb = grads.biases[i].data();
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= step * gb[j];
      }
    }
    result.history.push_back({epoch, loss_sum / double(order.size()), double(correct) / double(order.size())});
    for (const auto& w : model.weights)
      if (!w.all_finite()) throw NumericError("training diverged at epoch " + std::to_string(epoch));
  }
  result.model = std::move(model);
  return result;
}

Prediction predict(const ModelWeights& model, const Tensor& image) {
  for (float v : image.data())
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("pixel value " + std::to_string(v) + " outside [0, 1]");
  const Tape tape = forward(model, image);
  return {argmax(tape.logits().data()), softmax(tape.logits().data())};
}

Evaluation evaluate(const ModelWeights& model, const LabeledImages& data) {
  check_labels(model, data);
  if (data.size() == 0) return {};
  std::vector<double> losses(data.size());
  std::vector<int> hits(data.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(data.size()); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const Tape tape = forward(model, data.images[u]);
    losses[u] = cross_entropy(softmax(tape.logits().data()), data.labels[u]);
    hits[u] = argmax(tape.logits().data()) == data.labels[u];
  }
  Evaluation e;
  for (std::size_t i = 0; i < data.size(); ++i) {
    e.loss += losses[i];
    e.accuracy += hits[i];
  }
  e.loss /= double(data.size());
  e.accuracy /= double(data.size());
  return e;
}

}  // namespace ncam
