#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "noisecam/noise.hpp"
#include "oracles.hpp"

using namespace ncam;

TEST(NoiseStats, HandValues) {
  const NoiseStats z = noise_stats(Tensor({4, 4, 3}));
  EXPECT_EQ(z.mu, 0.0);
  EXPECT_EQ(z.sigma, 0.0);
  const NoiseStats c = noise_stats(Tensor({2, 3}, 0.5f));
  EXPECT_DOUBLE_EQ(c.mu, 0.5);
  EXPECT_DOUBLE_EQ(c.sigma, 0.0);
  const NoiseStats two = noise_stats(Tensor({2}, {-1.0f, 1.0f}));
  EXPECT_DOUBLE_EQ(two.mu, 0.0);
  EXPECT_DOUBLE_EQ(two.sigma, 1.0);
  EXPECT_EQ(two.shape, (Shape{2}));
  const NoiseStats four = noise_stats(Tensor({4}, {1, 2, 3, 4}));
  EXPECT_DOUBLE_EQ(four.mu, 2.5);
  EXPECT_DOUBLE_EQ(four.sigma, std::sqrt(1.25));
}

TEST(DeriveSeed, DeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ull, 1ull, 2ull})
    for (std::uint64_t s = 0; s < 200; ++s) seen.insert(derive_seed(base, s));
  EXPECT_EQ(seen.size(), 600u);
}

TEST(MatchedGaussian, ZeroSigmaIsConstant) {
  NoiseStats s;
  s.mu = 0.25;
  s.shape = {3, 3, 3};
  const Perturbation p = sample_matched_gaussian(s, 11, 4);
  EXPECT_EQ(p.kind, NoiseKind::Gaussian);
  EXPECT_EQ(p.seed_id, 4);
  for (float v : p.noise.data()) EXPECT_EQ(v, 0.25f);
}

TEST(MatchedGaussian, BitIdenticalPerSeed) {
  NoiseStats s{0.001, 0.02, {32, 32, 3}};
  const Perturbation a = sample_matched_gaussian(s, 99), b = sample_matched_gaussian(s, 99);
  const Perturbation c = sample_matched_gaussian(s, 100);
  EXPECT_EQ(a.noise.values(), b.noise.values());
  EXPECT_NE(a.noise.values(), c.noise.values());
}

TEST(MatchedGaussian, MomentsWithinBounds) {
  NoiseStats s{0.003, 0.017, {32, 32, 3}};
  int mean_ok = 0, sigma_ok = 0;
  const int seeds = 100;
  for (int i = 0; i < seeds; ++i) {
    const NoiseStats got = noise_stats(sample_matched_gaussian(s, derive_seed(5, std::uint64_t(i))));
    mean_ok += std::abs(got.mu - s.mu) < 4.0 * s.sigma / std::sqrt(3072.0);
    sigma_ok += std::abs(got.sigma - s.sigma) <= 0.15 * s.sigma;
    EXPECT_EQ(got.shape, s.shape);
  }
  EXPECT_GE(mean_ok, 99);
  EXPECT_GE(sigma_ok, 95);
}

TEST(ComponentsForVariance, Examples) {
  EXPECT_EQ(components_for_variance({3.0, 1.0}, 0.75), 1u);
  EXPECT_EQ(components_for_variance({3.0, 1.0}, 0.76), 2u);
  EXPECT_EQ(components_for_variance({3.0, 1.0}, 1.0), 2u);
  EXPECT_EQ(components_for_variance({0.0, 0.0}, 0.99), 0u);
  EXPECT_EQ(components_for_variance({5.0, 0.0, 0.0}, 0.99), 1u);
}

TEST(PcaClean, RankOneImageReconstructs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor img({16, 16, 3});
  for (std::size_t x = 0; x < 16; ++x)
    for (std::size_t c = 0; c < 3; ++c) {
      const float base = u(rng), amp = u(rng) * 0.3f;
      for (std::size_t y = 0; y < 16; ++y) img.at(y, x, c) = snap_pixel(base * (0.7f + amp * float(y) / 16.0f));
    }
  const Tensor out = pca_clean(img, 0.99);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-5);
}

TEST(PcaClean, FullVarianceIsNearIdentity) {
  std::mt19937_64 rng(4);
  const Tensor img = oracle::grid_image(rng, 16);
  const Tensor out = pca_clean(img, 1.0);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out[i], img[i], 1e-4);
}

TEST(PcaClean, ZeroVarianceChannelPassesThrough) {
  Tensor img({8, 8, 2}, 0.3f);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) img.at(y, x, 1) = u(rng);
  std::vector<PcaChannelInfo> info;
  const Tensor out = pca_clean(img, 0.99, &info);
  ASSERT_EQ(info.size(), 2u);
  EXPECT_EQ(info[0].kept, 0u);
  EXPECT_GT(info[1].kept, 0u);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(out.at(y, x, 0), 0.3f);
  const Tensor zero = pca_clean(Tensor({4, 4, 1}), 0.99);
  for (float v : zero.data()) EXPECT_EQ(v, 0.0f);
}

TEST(PcaClean, MatchesJacobiOracle) {
  std::mt19937_64 rng(2024);
  for (int n = 0; n < 8; ++n) {
    const Tensor img = oracle::grid_image(rng);
    std::vector<PcaChannelInfo> info;
    const Tensor out = pca_clean(img, 0.99, &info);
    for (std::size_t c = 0; c < 3; ++c) {
      const oracle::ChannelPca ref = oracle::channel_pca(img, c);
      ASSERT_EQ(info[c].eigenvalues.size(), ref.eig.values.size());
      for (std::size_t k = 0; k < ref.eig.values.size(); ++k)
        EXPECT_NEAR(info[c].eigenvalues[k], ref.eig.values[k], 1e-10 * ref.eig.values[0]);
      const std::size_t kept = oracle::minimal_components(ref.eig.values, 0.99);
      EXPECT_EQ(info[c].kept, kept);
      EXPECT_GE(oracle::cumulative_ratio(ref.eig.values, kept), 0.99);
      EXPECT_LT(oracle::cumulative_ratio(ref.eig.values, kept - 1), 0.99);

      // Reconstruction from the oracle basis.
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) {
          double v = ref.mean[x];
          for (std::size_t k = 0; k < kept; ++k) {
            double proj = 0.0;
            for (std::size_t j = 0; j < 32; ++j) proj += ref.centered[y][j] * ref.eig.vectors[k][j];
            v += proj * ref.eig.vectors[k][x];
          }
          EXPECT_NEAR(out.at(y, x, c), std::clamp(v, 0.0, 1.0), 1e-5);
        }
    }
  }
}

TEST(PcaClean, RetainedSubspaceReconstructsItself) {
  // Mid-range images so the first reconstruction needs no clipping.
  std::mt19937_64 rng(8);
  for (int n = 0; n < 20; ++n) {
    Tensor img = oracle::grid_image(rng);
    for (auto& v : img.data()) v = snap_pixel(0.25f + 0.5f * v);
    const Tensor once = pca_clean(img, 0.99);
    const Tensor twice = pca_clean(once, 1.0 - 1e-6);
    for (std::size_t i = 0; i < once.size(); ++i) ASSERT_NEAR(twice[i], once[i], 1e-3);
  }
}

TEST(PcaClean, RejectsBadArguments) {
  EXPECT_THROW(pca_clean(Tensor({4, 4}), 0.99), ShapeError);
  EXPECT_THROW(pca_clean(Tensor({4, 4, 1}), 0.0), ConfigError);
  EXPECT_THROW(pca_clean(Tensor({4, 4, 1}), 1.5), ConfigError);
}

TEST(ExtractNoise, ExactDecomposition) {
  std::mt19937_64 rng(12);
  for (int n = 0; n < 50; ++n) {
    const Tensor img = oracle::grid_image(rng);
    const Tensor clean = pca_clean(img, 0.99);
    const Tensor noise = extract_noise(img, clean);
    const Tensor back = clean + noise;
    for (std::size_t i = 0; i < img.size(); ++i) ASSERT_EQ(back[i], img[i]);
    EXPECT_LT(std::abs(noise_stats(noise).mu), 1e-3);
  }
  const Tensor same = oracle::grid_image(rng);
  for (float v : extract_noise(same, same).values()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(extract_noise(Tensor({2, 2, 1}), Tensor({2, 2, 3})), ShapeError);
}

TEST(PixelGrid, SnapIsIdempotentAndClipped) {
  EXPECT_EQ(snap_pixel(-0.5f), 0.0f);
  EXPECT_EQ(snap_pixel(2.0f), 1.0f);
  EXPECT_EQ(snap_pixel(1e-9f), 0.0f);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int i = 0; i < 10000; ++i) {
    const float v = u(rng), s = snap_pixel(v);
    EXPECT_LE(std::abs(s - v), kPixelStep);
    EXPECT_EQ(snap_pixel(s), s);
  }
}

TEST(GaussianBlur, KernelNormalizedWithExpectedWidth) {
  for (double r : {0.1, 0.5, 1.0, 1.5, 3.2}) {
    const auto k = gaussian_kernel(r);
    EXPECT_EQ(k.size(), 2 * std::size_t(std::ceil(3.0 * r)) + 1);
    double sum = 0.0;
    for (float w : k) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-6);
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_FLOAT_EQ(k[i], k[k.size() - 1 - i]);
  }
  EXPECT_THROW(gaussian_kernel(0.0), ConfigError);
}

TEST(GaussianBlur, ConstantUnchangedAndSymmetric) {
  const Tensor c({9, 9, 3}, 0.4f);
  for (float v : gaussian_blur(c, 1.5).values()) EXPECT_NEAR(v, 0.4f, 1e-6);

  Tensor dot({11, 11, 1});
  dot.at(5, 5, 0) = 1.0f;
  const Tensor b = gaussian_blur(dot, 1.5);
  for (std::size_t d = 1; d <= 5; ++d) {
    EXPECT_NEAR(b.at(5, 5 - d, 0), b.at(5, 5 + d, 0), 1e-6);
    EXPECT_NEAR(b.at(5 - d, 5, 0), b.at(5 + d, 5, 0), 1e-6);
  }
  EXPECT_LT(b.at(5, 5, 0), 1.0f);

  std::mt19937_64 rng(2);
  const Tensor img = oracle::grid_image(rng, 8);
  const Tensor near = gaussian_blur(img, 0.1);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(near[i], img[i], 1e-6);
  for (float v : gaussian_blur(img, 2.0).values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}
