#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisecam/model.hpp"
#include "noisecam/network.hpp"

namespace ncam {

enum class CamVariant { GradCam, GradCamPP, LayerCam, NoiseCam };
std::string_view to_string(CamVariant v);

/// Nonnegative H x W map at input resolution.
struct Heatmap {
  Tensor values;
  std::string layer_id;
  int category = 0;
  CamVariant variant = CamVariant::GradCam;
};

/// Intermediate weights at feature-map resolution (h x w x K unless noted).
struct CamWeights {
  Tensor coefficients;                  // Grad-CAM++ a_ij^kc
  std::vector<double> channel_weights;  // w_k^c, one per channel
  Tensor pixel_weights;                 // relu(g)
  Tensor global_weights;                // w_k^c broadcast over the map
  Tensor noise_weights;                 // global - pixel
};

/// Align-corners bilinear resize of an h x w map.
Tensor upsample_bilinear(const Tensor& map, std::size_t height, std::size_t width);

/// Min-max to [0, 1]; a constant positive map becomes all ones and an
/// all-zero map stays zero.
Tensor normalize_minmax(const Tensor& map);

// Feature-map-resolution kernels over activations A (h x w x K) and their
// score gradients g (same shape). Each returns an h x w map.
namespace cam {

Tensor gradcam(const Tensor& activations, const Tensor& grads);
/// Coefficients and channel weights; a zero-gradient pixel (or a vanishing
/// denominator) gets coefficient 0.
CamWeights gradcampp_weights(const Tensor& activations, const Tensor& grads);
Tensor weighted_sum(const Tensor& activations, const std::vector<double>& channel_weights);
Tensor layercam(const Tensor& activations, const Tensor& grads);
/// Grad-CAM++ weights extended with the pixel, global and noise fields.
CamWeights noisecam_weights(const Tensor& activations, const Tensor& grads);
Tensor noisecam(const Tensor& activations, const CamWeights& weights);

}  // namespace cam

enum class Normalize { Yes, No };

Heatmap gradcam(const ModelWeights& model, const Tensor& image, std::string_view layer_id, int category,
                Normalize normalize = Normalize::Yes);
std::pair<Heatmap, CamWeights> gradcam_pp(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                                          int category);
std::pair<Heatmap, CamWeights> layercam(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                                        int category);
/// Unnormalized. Category defaults to the top-1 prediction.
Heatmap noisecam(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                 std::optional<int> category = std::nullopt);

/// Grad-CAM maps for every conv layer from a single backward pass.
std::vector<Heatmap> gradcam_all_layers(const ModelWeights& model, const Tensor& image, int category,
                                        Normalize normalize = Normalize::No);

/// Grad-CAM++, LayerCAM and NoiseCAM from one forward/backward pass.
struct CamBundle {
  Heatmap gradcampp;
  Heatmap layercam;
  Heatmap noisecam;
  CamWeights weights;
};
CamBundle cam_bundle(const ModelWeights& model, const Tensor& image, std::string_view layer_id,
                     std::optional<int> category = std::nullopt);

inline constexpr std::string_view kDefaultNoiseCamLayer = "block2_conv1";

}  // namespace ncam
