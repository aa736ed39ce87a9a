#pragma once

#include <cstdint>
#include <vector>

#include "noisecam/attack.hpp"

namespace ncam {

struct NoiseStats {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  Shape shape;
};

NoiseStats noise_stats(const Tensor& noise);
inline NoiseStats noise_stats(const Perturbation& p) { return noise_stats(p.noise); }

/// SplitMix64 of (base, stream): independent sub-seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// i.i.d. N(mu, sigma) with the stats' shape; deterministic per rng_seed.
Perturbation sample_matched_gaussian(const NoiseStats& stats, std::uint64_t rng_seed, int seed_id = -1);

/// Number of leading components whose cumulative variance ratio reaches
/// `retained_variance`; `eigenvalues` must be sorted in descending order.
std::size_t components_for_variance(const std::vector<double>& eigenvalues, double retained_variance);

struct PcaChannelInfo {
  std::vector<double> eigenvalues;  // descending
  std::size_t kept = 0;             // 0 for a zero-variance channel
};

/// Per channel: rows are observations of W-dimensional vectors. Centers,
/// keeps the fewest leading components reaching `retained_variance`,
/// reconstructs and snaps to the pixel grid. Zero-variance channels pass
/// through.
Tensor pca_clean(const Tensor& image, double retained_variance = 0.99,
                 std::vector<PcaChannelInfo>* info = nullptr);

/// original - cleaned; exact when both lie on the pixel grid.
Tensor extract_noise(const Tensor& original, const Tensor& cleaned);

/// Normalized 1-D Gaussian taps with sigma = radius and half-width ceil(3 sigma).
std::vector<float> gaussian_kernel(double radius);

/// Separable blur with clamp-to-edge borders; output clipped to [0, 1].
Tensor gaussian_blur(const Tensor& image, double radius);

}  // namespace ncam
