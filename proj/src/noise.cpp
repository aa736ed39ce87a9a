#include "noisecam/noise.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace ncam {

NoiseStats noise_stats(const Tensor& noise) {
  NoiseStats s;
  s.shape = noise.shape();
  if (noise.empty()) return s;
  double sum = 0.0;
  for (float v : noise.data()) sum += v;
  s.mu = sum / double(noise.size());
  double ss = 0.0;
  for (float v : noise.data()) ss += (v - s.mu) * (v - s.mu);
  s.sigma = std::sqrt(ss / double(noise.size()));
  return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Perturbation sample_matched_gaussian(const NoiseStats& stats, std::uint64_t rng_seed, int seed_id) {
  Perturbation p{Tensor(stats.shape, static_cast<float>(stats.mu)), NoiseKind::Gaussian, 1.0f, seed_id};
  if (stats.sigma <= 0.0) return p;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> dist(stats.mu, stats.sigma);
  for (auto& v : p.noise.data()) v = static_cast<float>(dist(rng));
  return p;
}

std::size_t components_for_variance(const std::vector<double>& eigenvalues, double retained_variance) {
  double total = 0.0;
  for (double e : eigenvalues) total += std::max(e, 0.0);
  if (total <= 0.0) return 0;
  double cum = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    cum += std::max(eigenvalues[k], 0.0);
    if (cum >= retained_variance * total) return k + 1;
  }
  return eigenvalues.size();
}

Tensor pca_clean(const Tensor& image, double retained_variance, std::vector<PcaChannelInfo>* info) {
  if (image.rank() != 3) throw ShapeError("pca_clean expects HxWxC, got " + to_string(image.shape()));
  if (!(retained_variance > 0.0 && retained_variance <= 1.0))
    throw ConfigError("retained variance must lie in (0, 1]");
  const std::size_t H = image.dim(0), W = image.dim(1), C = image.dim(2);
  Tensor out = image;
  if (info) info->assign(C, {});

  for (std::size_t c = 0; c < C; ++c) {
    Eigen::MatrixXd X(H, W);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) X(Eigen::Index(y), Eigen::Index(x)) = image.at(y, x, c);
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - mean;
    if (centered.squaredNorm() == 0.0) continue;
    const Eigen::MatrixXd cov = centered.transpose() * centered / double(std::max<std::size_t>(H - 1, 1));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed in pca_clean");
    // Eigen returns ascending eigenvalues.
    std::vector<double> values(W);
    for (std::size_t k = 0; k < W; ++k) values[k] = eig.eigenvalues()(Eigen::Index(W - 1 - k));
    const std::size_t kept = components_for_variance(values, retained_variance);
    if (info) (*info)[c] = {values, kept};
    if (kept == 0) continue;

    const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(Eigen::Index(kept));
    const Eigen::MatrixXd recon = (centered * basis * basis.transpose()).rowwise() + mean;
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        out.at(y, x, c) = snap_pixel(static_cast<float>(recon(Eigen::Index(y), Eigen::Index(x))));
  }
  return out;
}

Tensor extract_noise(const Tensor& original, const Tensor& cleaned) { return original - cleaned; }

std::vector<float> gaussian_kernel(double radius) {
  if (!(radius > 0.0)) throw ConfigError("blur radius must be > 0");
  const int half = static_cast<int>(std::ceil(3.0 * radius));
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    w[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * (i * i) / (radius * radius));
    sum += w[static_cast<std::size_t>(i + half)];
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = static_cast<float>(w[i] / sum);
  return out;
}

Tensor gaussian_blur(const Tensor& image, double radius) {
  if (image.rank() != 3) throw ShapeError("gaussian_blur expects HxWxC, got " + to_string(image.shape()));
  const auto taps = gaussian_kernel(radius);
  const long half = static_cast<long>(taps.size() / 2);
  const long H = long(image.dim(0)), W = long(image.dim(1)), C = long(image.dim(2));
  auto pass = [&](const Tensor& src, bool horizontal) {
    Tensor dst(src.shape());
#pragma omp parallel for schedule(static)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        for (long c = 0; c < C; ++c) {
          double acc = 0.0;
          for (long t = -half; t <= half; ++t) {
            const long sy = horizontal ? y : std::clamp(y + t, 0L, H - 1);
            const long sx = horizontal ? std::clamp(x + t, 0L, W - 1) : x;
            acc += double(taps[std::size_t(t + half)]) * src.at(std::size_t(sy), std::size_t(sx), std::size_t(c));
          }
          dst.at(std::size_t(y), std::size_t(x), std::size_t(c)) = static_cast<float>(acc);
        }
    return dst;
  };
  return clamp(pass(pass(image, true), false), 0.0f, 1.0f);
}

}  // namespace ncam
