#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "noisecam/tensor.hpp"

namespace ncam {

enum class LayerKind { Conv, MaxPool, Flatten, Dense };
enum class Activation { None, Relu };

std::string_view to_string(LayerKind kind);

/// One layer of the sequential classifier. ReLU is fused into conv/dense
/// layers through `activation`, so each record keeps pre- and post-activation.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Conv;
  int kernel = 0;        // conv: square kernel extent
  int in_channels = 0;   // conv: input channels; dense: input features
  int out_channels = 0;  // conv: filters; dense: units
  int stride = 1;        // conv / pool
  int padding = 0;       // conv
  int window = 0;        // pool
  Activation activation = Activation::None;

  bool has_params() const { return kind == LayerKind::Conv || kind == LayerKind::Dense; }
  bool operator==(const LayerSpec&) const = default;
};

struct ModelWeights {
  std::vector<LayerSpec> layers;
  std::vector<Tensor> weights;  // empty tensor for parameter-free layers
  std::vector<Tensor> biases;
  int num_classes = 0;
  Shape input_shape;
  std::uint64_t seed = 0;

  /// Throws ConfigError listing the valid ids when `id` is unknown.
  std::size_t layer_index(std::string_view id) const;
  /// Like layer_index but additionally requires a convolution layer.
  std::size_t conv_layer_index(std::string_view id) const;
  std::vector<std::size_t> conv_layers() const;
  std::vector<std::string> conv_layer_ids() const;
  /// Output shape of every layer, in order.
  std::vector<Shape> output_shapes() const;

  bool operator==(const ModelWeights&) const = default;
};

inline constexpr int kDefaultClasses = 6;
inline constexpr std::uint64_t kDefaultModelSeed = 1234;

/// Three VGG-style blocks (16/32/64 filters, two 3x3 convs + 2x2 pool each),
/// flatten, fc1 (64), predictions. Input 32x32x3. He-normal init from `seed`.
ModelWeights build_default_model(int num_classes = kDefaultClasses, std::uint64_t seed = kDefaultModelSeed);

/// Validates parameter shapes against the layer specs; throws DataError.
void validate(const ModelWeights& model);

// "NWV v1" weights file.
void save_weights(const ModelWeights& model, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);
void write_weights(std::ostream& out, const ModelWeights& model);
ModelWeights read_weights(std::istream& in);

}  // namespace ncam
