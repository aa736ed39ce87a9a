#include "noisecam/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace ncam {

ActivePointSet binarize_map(const Tensor& map, double fraction) {
  if (map.rank() < 2) throw ShapeError("binarize_map expects an HxW map, got " + to_string(map.shape()));
  ActivePointSet pts;
  if (map.empty()) return pts;
  const double peak = *std::max_element(map.data().begin(), map.data().end());
  if (peak <= 0.0) return pts;
  const double cut = fraction * peak;
  const std::size_t H = map.dim(0), W = map.dim(1);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      if (map[y * W + x] > cut) pts.push_back({int(y), int(x)});
  return pts;
}

std::vector<std::size_t> ClusterResult::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(cluster_count), 0);
  for (int l : labels)
    if (l >= 0) ++out[static_cast<std::size_t>(l)];
  return out;
}

namespace {

struct Grid {
  double eps;
  long cell;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;

  static std::int64_t key(long gy, long gx) { return (std::int64_t(gy) << 32) ^ std::int64_t(std::uint32_t(gx)); }

  Grid(const ActivePointSet& pts, double e) : eps(e), cell(std::max<long>(1, long(std::ceil(e)))) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      buckets[key(floor_div(pts[i].row), floor_div(pts[i].col))].push_back(i);
  }

  long floor_div(long v) const { return v >= 0 ? v / cell : -((-v + cell - 1) / cell); }

  std::vector<std::size_t> neighbors(const ActivePointSet& pts, std::size_t i) const {
    std::vector<std::size_t> out;
    const long gy = floor_div(pts[i].row), gx = floor_div(pts[i].col);
    const double e2 = eps * eps;
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        auto it = buckets.find(key(gy + dy, gx + dx));
        if (it == buckets.end()) continue;
        for (std::size_t j : it->second) {
          const double ry = pts[j].row - pts[i].row, rx = pts[j].col - pts[i].col;
          if (ry * ry + rx * rx <= e2) out.push_back(j);
        }
      }
    std::sort(out.begin(), out.end());
    return out;
  }
};

}  // namespace

ClusterResult dbscan(const ActivePointSet& points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw ConfigError("dbscan eps must be > 0");
  if (min_pts < 1) throw ConfigError("dbscan min_pts must be >= 1");
  ClusterResult r;
  const std::size_t n = points.size();
  r.labels.assign(n, kNoise);
  if (n == 0) return r;

  // Scan in row-major order regardless of the input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(points[a].row, points[a].col) < std::pair(points[b].row, points[b].col);
  });

  const Grid grid(points, eps);
  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i] = grid.neighbors(points, i);
    core[i] = nbrs[i].size() >= static_cast<std::size_t>(min_pts);
  }

  for (std::size_t seed : order) {
    if (!core[seed] || r.labels[seed] != kNoise) continue;
    const int id = r.cluster_count++;
    r.labels[seed] = id;
    std::deque<std::size_t> frontier{seed};
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : nbrs[p]) {
        if (r.labels[q] != kNoise) continue;
        r.labels[q] = id;
        if (core[q]) frontier.push_back(q);
      }
    }
  }
  return r;
}

void NoiseCamConfig::validate() const {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("binarize fraction must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("dbscan eps must be > 0");
  if (min_pts < 1) throw ConfigError("dbscan min_pts must be >= 1");
  if (max_benign_clusters < 0) throw ConfigError("cluster threshold must be >= 0");
}

Verdict cluster_verdict(int cluster_count, int max_benign_clusters) {
  return cluster_count > max_benign_clusters ? Verdict::Adversarial : Verdict::Benign;
}

DetectionReport detect_by_noisecam(const ModelWeights& model, const Tensor& input, const NoiseCamConfig& cfg) {
  cfg.validate();
  const Heatmap map = noisecam(model, input, cfg.probe_layer);
  const ClusterResult clusters = dbscan(binarize_map(map, cfg.fraction), cfg.eps, cfg.min_pts);
  DetectionReport r;
  r.method = "noisecam";
  r.category = map.category;
  r.cluster_count = clusters.cluster_count;
  r.cluster_sizes = clusters.sizes();
  r.verdict = cluster_verdict(clusters.cluster_count, cfg.max_benign_clusters);
  return r;
}

}  // namespace ncam
