#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "noisecam/config.hpp"
#include "noisecam/dataset.hpp"
#include "noisecam/noise.hpp"

namespace ncam {

struct SeedAttempt {
  int dataset_index = 0;
  int label = 0;
  bool success = false;
  int adversarial_label = 0;
  int iterations = 0;
  double coverage = 0.0;
  NoiseStats adversarial_stats;  // of the base perturbation
  NoiseStats gaussian_stats;     // of its matched Gaussian sample
};

/// One successful seed with its amplified perturbations, one per strength.
struct CorpusEntry {
  int attempt = 0;  // index into Corpus::attempts
  int label = 0;
  Tensor seed;
  std::vector<Perturbation> adversarial;
  std::vector<Perturbation> gaussian;
};

struct Corpus {
  std::vector<float> strengths;
  std::vector<SeedAttempt> attempts;
  std::vector<CorpusEntry> entries;
  double yield() const;
};

/// Correctly classified images in class-interleaved order (index i of class
/// k before index i + 1 of any class), at most `limit` of them.
std::vector<int> correctly_classified(const ModelWeights& model, const LabeledImages& data, std::size_t limit);

/// Attacks `seed_indices` of `data` in parallel; successful seeds get five
/// amplified adversarial and matched-Gaussian variants. Gaussian draws use
/// derive_seed(rng_seed, attempt). Throws DataError when a seed is not
/// classified correctly.
Corpus build_attack_corpus(const ModelWeights& model, const LabeledImages& data, const std::vector<int>& seed_indices,
                           const AttackConfig& cfg, std::uint64_t rng_seed);

/// Directory layout: seeds.ntf, adversarial.ntf, gaussian.ntf, corpus.csv.
/// Returns the written paths.
std::vector<std::filesystem::path> save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
/// Throws DataError listing every missing file.
Corpus load_corpus(const std::filesystem::path& dir);

enum class ItemKind { Clean, Gaussian, Adversarial };
std::string_view to_string(ItemKind kind);

struct CorpusItem {
  std::size_t entry = 0;
  ItemKind kind = ItemKind::Clean;
  std::optional<float> strength;  // empty for clean
  Tensor image;
};

/// Clean seed, then adversarial and Gaussian variants at each strength.
std::vector<CorpusItem> corpus_items(const Corpus& corpus);

enum class Method { NoiseCam, Deviation };
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Accuracy over all items, TPR over adversarial items, TNR over clean and
/// Gaussian items. Undefined rates stay empty.
struct Metrics {
  std::string group;
  std::optional<float> strength;
  std::size_t items = 0;
  std::optional<double> accuracy;
  std::optional<double> tpr;
  std::optional<double> tnr;
};

struct ItemVerdict {
  std::size_t entry = 0;
  ItemKind kind = ItemKind::Clean;
  std::optional<float> strength;
  DetectionReport report;
};

struct EvalReport {
  Method method = Method::NoiseCam;
  std::vector<ItemVerdict> verdicts;
  std::vector<Metrics> metrics;  // "all", "clean", "gaussian", "adversarial", then per strength
  const Metrics& group(std::string_view name, std::optional<float> strength = std::nullopt) const;
};

Metrics compute_metrics(const std::vector<ItemVerdict>& verdicts, std::string group,
                        std::optional<float> strength = std::nullopt);

/// Runs one detector over every corpus item. Deviation sampling uses
/// derive_seed(rng_seed, item index).
EvalReport run_eval(const ModelWeights& model, const Corpus& corpus, Method method, const RunConfig& cfg,
                    std::uint64_t rng_seed);

void write_metrics_csv(const EvalReport& report, const std::filesystem::path& path);
void write_verdicts_csv(const EvalReport& report, const std::filesystem::path& path);

struct FigureOptions {
  std::size_t panel_samples = 4;
};

/// Writes deviation_by_layer.csv, layer_compromise.csv, detector_comparison.csv and
/// panels/sample_NNN/ plus clusters/sample_NNN_s<strength>.ppm overlays.
std::vector<std::filesystem::path> export_figures(const ModelWeights& model, const Corpus& corpus,
                                                  const std::vector<EvalReport>& reports, const RunConfig& cfg,
                                                  const std::filesystem::path& dir, const FigureOptions& opt = {});

struct BlurRow {
  ItemKind kind = ItemKind::Clean;
  std::optional<float> strength;
  std::size_t items = 0;
  double accuracy = 0.0;
  double blurred_accuracy = 0.0;
};

/// Accuracy against the seed label before and after blurring, per kind and
/// strength, preceded by one aggregate row per kind.
std::vector<BlurRow> blur_baseline(const ModelWeights& model, const Corpus& corpus, double radius);
void write_blur_csv(const std::vector<BlurRow>& rows, const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  RunConfig config;
  std::vector<std::filesystem::path> files;
  std::string run_id() const;
};

/// Writes `dir`/manifest_<command>.json after checking that every listed
/// file exists; throws DataError otherwise.
std::filesystem::path write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace ncam
