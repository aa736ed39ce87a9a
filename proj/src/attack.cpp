#include "noisecam/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncam {

void AttackConfig::validate() const {
  if (!(delta > 0.0f)) throw ConfigError("attack delta must be > 0");
  if (top_k < 1) throw ConfigError("attack top_k must be >= 1");
  if (neurons < 0) throw ConfigError("attack neurons must be >= 0");
  if (!(step_size > 0.0f)) throw ConfigError("attack step_size must be > 0");
  if (max_iters < 0) throw ConfigError("attack max_iters must be >= 0");
  if (!(coverage_threshold >= 0.0f)) throw ConfigError("coverage threshold must be >= 0");
  if (strengths.empty()) throw ConfigError("at least one strength is required");
  for (float s : strengths)
    if (!(s > 0.0f)) throw ConfigError("strengths must be > 0");
}

std::string_view to_string(NoiseKind kind) { return kind == NoiseKind::Adversarial ? "adversarial" : "gaussian"; }

namespace {

struct LayerRange {
  float lo = 0.0f;
  float hi = 0.0f;
};

LayerRange range_of(const Tensor& t) {
  if (t.empty()) return {};
  auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
  return {*lo, *hi};
}

float scaled(float v, LayerRange r) { return r.hi > r.lo ? (v - r.lo) / (r.hi - r.lo) : 0.0f; }

std::vector<int> top_candidates(std::span<const float> logits, int original, int k) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(logits.size()); ++i)
    if (i != original) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return logits[a] > logits[b]; });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k)));
  return idx;
}

}  // namespace

std::vector<NeuronAddress> select_neurons(const ModelWeights& model, const Tape& tape, int m) {
  if (m <= 0) return {};
  struct Candidate {
    float value;
    NeuronAddress addr;
  };
  std::vector<Candidate> all;
  for (auto layer : model.conv_layers()) {
    const Tensor& a = tape.activation(layer);
    const auto r = range_of(a);
    for (std::size_t i = 0; i < a.size(); ++i) all.push_back({scaled(a[i], r), {layer, i}});
  }
  const auto take = std::min(all.size(), static_cast<std::size_t>(m));
  std::partial_sort(all.begin(), all.begin() + static_cast<long>(take), all.end(),
                    [](const Candidate& a, const Candidate& b) {
                      if (a.value != b.value) return a.value < b.value;
                      return a.addr < b.addr;
                    });
  std::vector<NeuronAddress> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(all[i].addr);
  return out;
}

double neuron_coverage(const ModelWeights& model, const Tape& tape, float threshold) {
  std::size_t active = 0, total = 0;
  for (auto layer : model.conv_layers()) {
    const Tensor& a = tape.activation(layer);
    const auto r = range_of(a);
    for (float v : a.data()) active += scaled(v, r) > threshold;
    total += a.size();
  }
  return total ? double(active) / double(total) : 0.0;
}

double attack_objective(const Tape& tape, int original, int top_k, const std::vector<NeuronAddress>& neurons,
                        float lambda) {
  const auto logits = tape.logits().data();
  double value = -double(logits[static_cast<std::size_t>(original)]);
  for (int i : top_candidates(logits, original, top_k)) value += logits[static_cast<std::size_t>(i)];
  double coverage = 0.0;
  for (const auto& n : neurons) coverage += tape.activation(n.layer)[n.index];
  return value + double(lambda) * coverage;
}

namespace {

// Keeps seed + noise inside [0, 1] without touching in-range entries.
float fit_to_range(float seed, float noise) {
  const float v = seed + noise;
  if (v < 0.0f) return -seed;
  if (v > 1.0f) return 1.0f - seed;
  return noise;
}

}  // namespace

Tensor apply_perturbation(const Tensor& seed_image, const Perturbation& p) {
  return snap_pixels(seed_image + p.noise);
}

AttackResult derive_perturbation(const ModelWeights& model, const Tensor& seed_image, int true_label,
                                 const AttackConfig& cfg, int seed_id) {
  cfg.validate();
  const Tape seed_tape = forward(model, seed_image);
  const int predicted = argmax(seed_tape.logits().data());
  if (predicted != true_label) {
    throw DataError("seed " + std::to_string(seed_id) + " is classified as " + std::to_string(predicted) +
                    " instead of " + std::to_string(true_label));
  }

  const auto neurons = select_neurons(model, seed_tape, cfg.neurons);
  AttackResult res;
  res.original_label = true_label;
  res.initial_objective = attack_objective(seed_tape, true_label, cfg.top_k, neurons, cfg.lambda);
  res.perturbation = {Tensor(seed_image.shape()), NoiseKind::Adversarial, 1.0f, seed_id};
  Tensor& noise = res.perturbation.noise;

  // Coverage seeds are constant across iterations.
  std::vector<std::pair<std::size_t, Tensor>> seeds;
  for (const auto& n : neurons) {
    auto it = std::find_if(seeds.begin(), seeds.end(), [&](const auto& s) { return s.first == n.layer; });
    if (it == seeds.end()) {
      seeds.emplace_back(n.layer, Tensor(seed_tape.activation(n.layer).shape()));
      it = std::prev(seeds.end());
    }
    it->second[n.index] += cfg.lambda;
  }

  Tape tape = seed_tape;
  for (int iter = 0;; ++iter) {
    const int label = argmax(tape.logits().data());
    res.iterations = iter;
    res.adversarial_label = label;
    if (label != true_label || iter == cfg.max_iters) break;

    Tensor dlogits(tape.logits().shape());
    dlogits[static_cast<std::size_t>(true_label)] = -1.0f;
    for (int c : top_candidates(tape.logits().data(), true_label, cfg.top_k)) dlogits[static_cast<std::size_t>(c)] = 1.0f;
    const Gradients g = backward(model, tape, {std::move(dlogits), seeds, std::nullopt, nullptr});
    if (!g.input.all_finite()) throw NumericError("non-finite input gradient in attack on seed " + std::to_string(seed_id));

    for (std::size_t i = 0; i < noise.size(); ++i) {
      const float gi = g.input[i];
      const float sign = gi > 0.0f ? 1.0f : (gi < 0.0f ? -1.0f : 0.0f);
      const float n = std::clamp(noise[i] + cfg.step_size * sign, -cfg.delta, cfg.delta);
      noise[i] = std::clamp(fit_to_range(seed_image[i], n), -cfg.delta, cfg.delta);
    }
    tape = forward(model, apply_perturbation(seed_image, res.perturbation));
  }
  res.success = res.adversarial_label != true_label;
  res.coverage = neuron_coverage(model, tape, cfg.coverage_threshold);
  res.final_objective = attack_objective(tape, true_label, cfg.top_k, neurons, cfg.lambda);
  return res;
}

Perturbation amplify(const Perturbation& p, float ratio, const Tensor& seed_image) {
  if (!(ratio > 0.0f)) throw ConfigError("amplification ratio must be > 0");
  require_same_shape(p.noise, seed_image, "amplify");
  Perturbation out{Tensor(p.noise.shape()), p.kind, ratio, p.seed_id};
  for (std::size_t i = 0; i < p.noise.size(); ++i) {
    const float scaled_noise = p.noise[i] * ratio;
    const float bound = std::abs(scaled_noise);
    out.noise[i] = std::clamp(fit_to_range(seed_image[i], scaled_noise), -bound, bound);
  }
  return out;
}

}  // namespace ncam
