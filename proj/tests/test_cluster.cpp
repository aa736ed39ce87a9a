#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "noisecam/cluster.hpp"
#include "oracles.hpp"

using namespace ncam;

TEST(Binarize, Examples) {
  EXPECT_TRUE(binarize_map(Tensor({4, 4})).empty());
  Tensor one({3, 5});
  one[7] = 0.2f;
  EXPECT_EQ(binarize_map(one), (ActivePointSet{{1, 2}}));
  const Tensor row({1, 3}, {0.2f, 0.6f, 1.0f});
  EXPECT_EQ(binarize_map(row, 0.5), (ActivePointSet{{0, 1}, {0, 2}}));
  // Strictly above the threshold.
  const Tensor edge({1, 2}, {0.5f, 1.0f});
  EXPECT_EQ(binarize_map(edge, 0.5), (ActivePointSet{{0, 1}}));
  EXPECT_TRUE(binarize_map(Tensor({2, 2}, -1.0f)).empty());
  EXPECT_THROW(binarize_map(Tensor({4})), ShapeError);
}

TEST(Binarize, RowMajorInBoundsNoDuplicates) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Tensor m = gradcheck::random_tensor({9, 13}, rng, 0.0f, 1.0f);
    const auto pts = binarize_map(m, 0.3);
    EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end(), [](const PixelPoint& a, const PixelPoint& b) {
      return std::pair(a.row, a.col) < std::pair(b.row, b.col);
    }));
    EXPECT_EQ(std::adjacent_find(pts.begin(), pts.end()), pts.end());
    for (const auto& p : pts) {
      EXPECT_GE(p.row, 0);
      EXPECT_LT(p.row, 9);
      EXPECT_GE(p.col, 0);
      EXPECT_LT(p.col, 13);
    }
  }
}

TEST(Dbscan, Examples) {
  EXPECT_EQ(dbscan({}).cluster_count, 0);
  const ClusterResult tri = dbscan({{0, 0}, {1, 0}, {0, 1}}, 2.0, 3);
  EXPECT_EQ(tri.cluster_count, 1);
  EXPECT_EQ(tri.labels, (std::vector<int>{0, 0, 0}));
  const ClusterResult far = dbscan({{0, 0}, {0, 10}, {10, 0}, {10, 10}, {20, 20}}, 2.0, 3);
  EXPECT_EQ(far.cluster_count, 0);
  for (int l : far.labels) EXPECT_EQ(l, kNoise);
  EXPECT_THROW(dbscan({{0, 0}}, 0.0, 3), ConfigError);
  EXPECT_THROW(dbscan({{0, 0}}, 2.0, 0), ConfigError);
}

TEST(Dbscan, BorderJoinsFirstCluster) {
  // (0,3) is a border point of both blobs.
  const ActivePointSet pts = {{0, 5}, {0, 6}, {1, 5}, {1, 6}, {0, 3}, {0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const ClusterResult r = dbscan(pts, 2.0, 4);
  EXPECT_EQ(r.cluster_count, 2);
  EXPECT_EQ(r.labels[4], 0);
  EXPECT_EQ(r.labels[0], 1);
  EXPECT_EQ(r.labels[5], 0);
  EXPECT_EQ(r.sizes(), (std::vector<std::size_t>{5, 4}));
}

TEST(Dbscan, MatchesQuadraticOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> eps_d(1.0, 5.0);
  std::uniform_int_distribution<int> mp(2, 6), side(10, 60);
  for (int t = 0; t < 200; ++t) {
    const auto pts = oracle::random_points(rng, 300, side(rng));
    const double eps = eps_d(rng);
    const int min_pts = mp(rng);
    const ClusterResult got = dbscan(pts, eps, min_pts);
    const auto want = oracle::dbscan(pts, eps, min_pts);
    ASSERT_EQ(got.labels, want) << "trial " << t;
    const int want_count = want.empty() ? 0 : *std::max_element(want.begin(), want.end()) + 1;
    EXPECT_EQ(got.cluster_count, want_count);
  }
}

TEST(Dbscan, CorePartitionIgnoresInputOrder) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    auto pts = oracle::random_points(rng, 200, 30);
    const double eps = std::uniform_real_distribution<double>(1.0, 4.0)(rng);
    const int min_pts = std::uniform_int_distribution<int>(2, 6)(rng);
    const ClusterResult a = dbscan(pts, eps, min_pts);

    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    ActivePointSet shuffled;
    for (std::size_t i : perm) shuffled.push_back(pts[i]);
    const ClusterResult b = dbscan(shuffled, eps, min_pts);

    // Map b back to the original indexing.
    std::vector<int> back(pts.size());
    for (std::size_t j = 0; j < perm.size(); ++j) back[perm[j]] = b.labels[j];
    std::vector<char> core(pts.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int n = 0;
      for (const auto& q : pts) {
        const double dr = pts[i].row - q.row, dc = pts[i].col - q.col;
        n += dr * dr + dc * dc <= eps * eps;
      }
      core[i] = n >= min_pts;
    }
    EXPECT_EQ(oracle::partition(a.labels, core), oracle::partition(back, core));
    EXPECT_EQ(a.cluster_count, b.cluster_count);
  }
}

TEST(Verdict, StrictlyExceedsThree) {
  EXPECT_EQ(cluster_verdict(0), Verdict::Benign);
  EXPECT_EQ(cluster_verdict(3), Verdict::Benign);
  EXPECT_EQ(cluster_verdict(4), Verdict::Adversarial);
  EXPECT_EQ(cluster_verdict(2, 1), Verdict::Adversarial);
}

TEST(NoiseCamConfig, Validation) {
  NoiseCamConfig c;
  EXPECT_NO_THROW(c.validate());
  c.fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.min_pts = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DetectByNoiseCam, ReportConsistentAndPure) {
  const ModelWeights m = build_default_model();
  std::mt19937_64 rng(21);
  for (int t = 0; t < 3; ++t) {
    const Tensor img = gradcheck::random_tensor({32, 32, 3}, rng, 0.0f, 1.0f);
    const NoiseCamConfig cfg;
    const DetectionReport r = detect_by_noisecam(m, img, cfg);
    EXPECT_EQ(r.method, "noisecam");
    const auto pts = binarize_map(noisecam(m, img, cfg.probe_layer), cfg.fraction);
    const ClusterResult c = dbscan(pts, cfg.eps, cfg.min_pts);
    EXPECT_EQ(*r.cluster_count, c.cluster_count);
    EXPECT_EQ(r.cluster_sizes, c.sizes());
    EXPECT_EQ(r.verdict, cluster_verdict(c.cluster_count));
    EXPECT_EQ(r.category, argmax(forward(m, img).logits().data()));
    const DetectionReport again = detect_by_noisecam(m, img, cfg);
    EXPECT_EQ(again.cluster_sizes, r.cluster_sizes);
  }
}
