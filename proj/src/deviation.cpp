#include "noisecam/deviation.hpp"

#include <algorithm>
#include <cmath>

#include "noisecam/noise.hpp"
#include "noisecam/stats.hpp"

namespace ncam {

std::string_view to_string(Verdict v) { return v == Verdict::Adversarial ? "adversarial" : "benign"; }

double cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine similarity");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * b[i];
    na += double(a[i]) * a[i];
    nb += double(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

DeviationRecord behavior_deviation(const ModelWeights& model, const Tensor& seed, const Tensor& perturbed,
                                   std::string_view layer_id, int category, NoiseKind kind, float strength) {
  const Heatmap a = gradcam(model, seed, layer_id, category, Normalize::No);
  const Heatmap b = gradcam(model, perturbed, layer_id, category, Normalize::No);
  return {std::string(layer_id), cosine_similarity(a, b), kind, strength};
}

std::vector<DeviationRecord> deviation_profile(const ModelWeights& model, const Tensor& seed, const Tensor& perturbed,
                                               int category, NoiseKind kind, float strength) {
  const auto a = gradcam_all_layers(model, seed, category);
  const auto b = gradcam_all_layers(model, perturbed, category);
  std::vector<DeviationRecord> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    out.push_back({a[i].layer_id, cosine_similarity(a[i], b[i]), kind, strength});
  return out;
}

LayerCompromiseProfile compromise_profile(const std::string& layer_id, const std::vector<DeviationRecord>& records,
                                          const std::vector<float>& strengths, std::size_t seed_count) {
  if (seed_count < kMinCompromiseSeeds) {
    throw DataError("compromise profile needs at least " + std::to_string(kMinCompromiseSeeds) + " seeds, got " +
                    std::to_string(seed_count));
  }
  std::vector<double> gaussian;
  for (const auto& r : records)
    if (r.layer_id == layer_id && r.kind == NoiseKind::Gaussian) gaussian.push_back(r.similarity);
  if (gaussian.empty()) throw DataError("no gaussian deviation records for layer '" + layer_id + "'");

  LayerCompromiseProfile p;
  p.layer_id = layer_id;
  p.threshold = stats::median(gaussian);
  p.strengths = strengths;
  for (float s : strengths) {
    std::size_t hits = 0, total = 0;
    for (const auto& r : records) {
      if (r.layer_id != layer_id || r.kind != NoiseKind::Adversarial || r.strength != s) continue;
      ++total;
      hits += r.similarity < p.threshold;
    }
    p.probability.push_back(total ? double(hits) / double(total) : 0.0);
    p.samples.push_back(total);
  }
  return p;
}

void DeviationConfig::validate() const {
  if (samples < kMinBenignSamples)
    throw ConfigError("deviation detector needs at least " + std::to_string(kMinBenignSamples) + " benign samples");
  if (!(retained_variance > 0.0 && retained_variance <= 1.0)) throw ConfigError("retained variance must be in (0, 1]");
  if (!(mad_factor >= 0.0)) throw ConfigError("MAD factor must be >= 0");
}

DetectionReport detect_by_deviation(const ModelWeights& model, const Tensor& input, const DeviationConfig& cfg,
                                    std::uint64_t rng_seed) {
  cfg.validate();
  model.conv_layer_index(cfg.probe_layer);
  const Tensor cleaned = pca_clean(input, cfg.retained_variance);
  const NoiseStats ns = noise_stats(extract_noise(input, cleaned));

  const Tape clean_tape = forward(model, cleaned);
  const int category = argmax(clean_tape.logits().data());
  const Heatmap reference = gradcam(model, cleaned, cfg.probe_layer, category, Normalize::No);

  std::vector<double> benign(static_cast<std::size_t>(cfg.samples));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.samples; ++i) {
    const Perturbation g = sample_matched_gaussian(ns, derive_seed(rng_seed, static_cast<std::uint64_t>(i)));
    const Tensor noisy = apply_perturbation(cleaned, g);
    benign[static_cast<std::size_t>(i)] =
        cosine_similarity(reference, gradcam(model, noisy, cfg.probe_layer, category, Normalize::No));
  }

  DetectionReport r;
  r.method = "deviation";
  r.category = category;
  r.similarity = cosine_similarity(reference, gradcam(model, input, cfg.probe_layer, category, Normalize::No));
  r.benign_median = stats::median(benign);
  r.benign_mad = stats::mad(benign);
  if (*r.benign_mad > 0.0) {
    r.threshold = *r.benign_median - cfg.mad_factor * *r.benign_mad;
  } else {
    r.threshold = *std::min_element(benign.begin(), benign.end());
  }
  r.verdict = *r.similarity < *r.threshold ? Verdict::Adversarial : Verdict::Benign;
  return r;
}

}  // namespace ncam
