#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "noisecam/attack.hpp"
#include "noisecam/cam.hpp"

namespace ncam {

enum class Verdict { Benign, Adversarial };
std::string_view to_string(Verdict v);

/// Per-input detector output. Deviation evidence and cluster evidence are
/// filled by the respective detector.
struct DetectionReport {
  Verdict verdict = Verdict::Benign;
  std::string method;
  int category = 0;
  // deviation detector
  std::optional<double> similarity;
  std::optional<double> benign_median;
  std::optional<double> benign_mad;
  std::optional<double> threshold;
  // NoiseCAM detector
  std::optional<int> cluster_count;
  std::vector<std::size_t> cluster_sizes;
};

/// vec(a).vec(b) / (|a| |b|); 0 when either norm vanishes.
double cosine_similarity(const Tensor& a, const Tensor& b);
inline double cosine_similarity(const Heatmap& a, const Heatmap& b) { return cosine_similarity(a.values, b.values); }

struct DeviationRecord {
  std::string layer_id;
  double similarity = 0.0;
  NoiseKind kind = NoiseKind::Adversarial;
  float strength = 1.0f;
};

/// Similarity of the layer's Grad-CAM maps for `seed` and `perturbed`, both
/// taken for `category` (the seed's predicted class).
DeviationRecord behavior_deviation(const ModelWeights& model, const Tensor& seed, const Tensor& perturbed,
                                   std::string_view layer_id, int category, NoiseKind kind = NoiseKind::Adversarial,
                                   float strength = 1.0f);

/// One record per conv layer, forward order, from one backward pass per image.
std::vector<DeviationRecord> deviation_profile(const ModelWeights& model, const Tensor& seed, const Tensor& perturbed,
                                               int category, NoiseKind kind = NoiseKind::Adversarial,
                                               float strength = 1.0f);

struct LayerCompromiseProfile {
  std::string layer_id;
  double threshold = 0.0;  // median of all gaussian similarities at the layer
  std::vector<float> strengths;
  std::vector<double> probability;  // P(D_a < threshold) per strength
  std::vector<std::size_t> samples;
};

inline constexpr std::size_t kMinCompromiseSeeds = 30;

/// Builds the profile from precomputed records of one layer. Needs records
/// from at least kMinCompromiseSeeds seeds (`seed_count`); throws DataError.
LayerCompromiseProfile compromise_profile(const std::string& layer_id, const std::vector<DeviationRecord>& records,
                                          const std::vector<float>& strengths, std::size_t seed_count);

struct DeviationConfig {
  std::string probe_layer = "block3_conv1";
  int samples = 50;
  double retained_variance = 0.99;
  double mad_factor = 3.0;
  void validate() const;
};

inline constexpr int kMinBenignSamples = 50;

/// Clean with PCA, extract the residual noise, resample matched Gaussian noise
/// onto the clean image, and flag the input when its similarity to the clean
/// image falls below median - mad_factor * MAD of the benign similarities
/// (strict minimum when MAD is zero).
DetectionReport detect_by_deviation(const ModelWeights& model, const Tensor& input, const DeviationConfig& cfg,
                                    std::uint64_t rng_seed);

}  // namespace ncam
