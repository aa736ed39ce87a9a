#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noisecam/cam.hpp"
#include "noisecam/deviation.hpp"

namespace ncam {

struct PixelPoint {
  int row = 0;
  int col = 0;
  bool operator==(const PixelPoint&) const = default;
};

using ActivePointSet = std::vector<PixelPoint>;

/// Pixels whose value exceeds `fraction` times the map maximum, row-major.
/// Maps with a nonpositive maximum yield no points.
ActivePointSet binarize_map(const Tensor& map, double fraction = 0.5);
inline ActivePointSet binarize_map(const Heatmap& map, double fraction = 0.5) {
  return binarize_map(map.values, fraction);
}

inline constexpr int kNoise = -1;

struct ClusterResult {
  std::vector<int> labels;  // cluster index per point, or kNoise
  int cluster_count = 0;
  std::vector<std::size_t> sizes() const;
};

/// DBSCAN with Euclidean distance; neighborhoods (distance <= eps) include the
/// point itself. Clusters are numbered in the order their first core point
/// appears; a border point joins the first cluster that reaches it.
ClusterResult dbscan(const ActivePointSet& points, double eps = 2.0, int min_pts = 3);

struct NoiseCamConfig {
  std::string probe_layer = "block2_conv1";
  double fraction = 0.5;
  double eps = 2.0;
  int min_pts = 3;
  int max_benign_clusters = 3;  // more clusters than this is adversarial
  void validate() const;
};

/// Verdict from a cluster count under the "exceeds max_benign_clusters" rule.
Verdict cluster_verdict(int cluster_count, int max_benign_clusters = 3);

/// NoiseCAM at the probe layer for the top-1 class, binarized, clustered.
DetectionReport detect_by_noisecam(const ModelWeights& model, const Tensor& input, const NoiseCamConfig& cfg);

}  // namespace ncam
