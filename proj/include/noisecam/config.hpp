#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "noisecam/attack.hpp"
#include "noisecam/cluster.hpp"
#include "noisecam/deviation.hpp"
#include "noisecam/train.hpp"

namespace ncam {

struct DataConfig {
  int train_per_class = 300;
  int test_per_class = 50;
};

struct CorpusConfig {
  int max_seeds = 200;  // correctly classified seeds to attack
};

/// Every knob the CLI exposes. Keys are `section.name`, e.g. `attack.delta`.
struct RunConfig {
  std::uint64_t seed = 20231;
  DataConfig data;
  TrainConfig train;
  AttackConfig attack;
  CorpusConfig corpus;
  DeviationConfig deviation;
  NoiseCamConfig noisecam;
  double blur_radius = 1.5;

  /// Throws ConfigError naming the key on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Sorted `key = value` pairs; round-trips through set().
  std::vector<std::pair<std::string, std::string>> entries() const;
  void validate() const;
  /// Probe layers must name conv layers of `model`.
  void validate_layers(const ModelWeights& model) const;
};

/// Flat `key = value` lines; `#` starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_config(const RunConfig& cfg);

}  // namespace ncam
