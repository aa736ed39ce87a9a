#pragma once

#include <compare>
#include <vector>

#include "noisecam/model.hpp"
#include "noisecam/network.hpp"

namespace ncam {

/// Knobs of the coverage-guided white-box attack. `delta` is an L-infinity
/// budget in pixel units.
struct AttackConfig {
  float delta = 0.06f;
  float lambda = 1.0f;
  int top_k = 3;
  int neurons = 10;
  float step_size = 0.01f;
  int max_iters = 50;
  float coverage_threshold = 0.25f;
  std::vector<float> strengths = {0.25f, 0.5f, 1.0f, 2.0f, 4.0f};

  /// Throws ConfigError.
  void validate() const;
};

enum class NoiseKind { Adversarial, Gaussian };
std::string_view to_string(NoiseKind kind);

struct Perturbation {
  Tensor noise;
  NoiseKind kind = NoiseKind::Adversarial;
  float strength = 1.0f;
  int seed_id = -1;
};

struct AttackResult {
  Perturbation perturbation;
  bool success = false;
  int original_label = 0;
  int adversarial_label = 0;
  int iterations = 0;
  double coverage = 0.0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

struct NeuronAddress {
  std::size_t layer = 0;
  std::size_t index = 0;
  auto operator<=>(const NeuronAddress&) const = default;
};

/// The `m` conv neurons with the lowest per-layer min-max scaled activation,
/// ties broken by (layer, index).
std::vector<NeuronAddress> select_neurons(const ModelWeights& model, const Tape& tape, int m);

/// Fraction of conv neurons whose per-layer min-max scaled activation exceeds
/// `threshold`. A layer with a degenerate range scales to all zeros.
double neuron_coverage(const ModelWeights& model, const Tape& tape, float threshold = 0.25f);

/// sum of the top-K logits other than `original` - logit[original]
/// + lambda * sum of the selected neurons' activations.
double attack_objective(const Tape& tape, int original, int top_k, const std::vector<NeuronAddress>& neurons,
                        float lambda);

/// Iterated sign-gradient ascent on attack_objective inside the delta box.
/// Throws DataError when the seed is not classified as `true_label`, and
/// NumericError on a non-finite gradient.
AttackResult derive_perturbation(const ModelWeights& model, const Tensor& seed_image, int true_label,
                                 const AttackConfig& cfg, int seed_id = -1);

/// Scales the noise by `ratio` and re-derives the noise actually applied after
/// clipping seed + noise to [0, 1].
Perturbation amplify(const Perturbation& p, float ratio, const Tensor& seed_image);

/// seed + noise, clipped to [0, 1] and snapped to the pixel grid.
Tensor apply_perturbation(const Tensor& seed_image, const Perturbation& p);

}  // namespace ncam
