#include "seer/propagation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "seer/error.hpp"

namespace seer {
namespace {

FeatureMatrix rows(std::initializer_list<std::vector<double>> r) {
  FeatureMatrix m;
  for (const auto& v : r) m.append(v);
  return m;
}

// F* = (1 - alpha) (I - alpha S)^-1 Y on a dense 4-node graph, by Gaussian elimination.
std::vector<std::vector<double>> closed_form(const std::vector<double>& xs, const std::vector<int>& seeds,
                                             double alpha) {
  const std::size_t n = xs.size();
  double sigma = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) sigma += std::abs(xs[i] - xs[j]);
  sigma /= static_cast<double>(n * (n - 1));
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) deg[i] += w[i][j] = std::exp(-std::pow(xs[i] - xs[j], 2) / (sigma * sigma));
  // Augmented system [I - alpha S | (1 - alpha) Y] for two classes.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 2, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j) - alpha * w[i][j] / std::sqrt(deg[i] * deg[j]);
    if (seeds[i] >= 0) a[i][n + static_cast<std::size_t>(seeds[i])] = 1.0 - alpha;
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n + 2; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<std::vector<double>> f(n, std::vector<double>(2, 0.0));
  for (std::size_t r = n; r-- > 0;) {
    for (std::size_t cls = 0; cls < 2; ++cls) {
      double v = a[r][n + cls];
      for (std::size_t k = r + 1; k < n; ++k) v -= a[r][k] * f[k][cls];
      f[r][cls] = v / a[r][r];
    }
  }
  return f;
}

TEST(SpreadLabelsTest, MatchesClosedFormOnSmallDenseGraph) {
  const std::vector<double> xs{0.0, 0.4, 1.0, 1.3};
  const auto expected = closed_form(xs, {0, -1, -1, 1}, 0.2);
  SpreadConfig cfg;
  cfg.graph = GraphKind::complete;
  cfg.max_iterations = 500;
  cfg.tolerance = 1e-14;
  const auto got = spread_labels(rows({{0.0}, {1.3}}), std::vector<ClassId>{0, 1}, rows({{0.4}, {1.0}}), cfg);
  ASSERT_TRUE(got.converged);
  for (std::size_t i : {1u, 2u}) {
    const double total = expected[i][0] + expected[i][1];
    EXPECT_NEAR(got.confidence[i - 1][0], expected[i][0] / total, 1e-9);
    EXPECT_NEAR(got.confidence[i - 1][1], expected[i][1] / total, 1e-9);
  }
  EXPECT_EQ(got.labels, (std::vector<ClassId>{0, 1}));
}

TEST(SpreadLabelsTest, KnnWithFourNodesEqualsCompleteGraph) {
  SpreadConfig knn;
  knn.max_iterations = 200;
  knn.tolerance = 1e-13;
  SpreadConfig full = knn;
  full.graph = GraphKind::complete;
  const auto l = rows({{0.0}, {1.3}});
  const auto u = rows({{0.4}, {1.0}});
  const std::vector<ClassId> y{0, 1};
  EXPECT_EQ(spread_labels(l, y, u, knn).confidence, spread_labels(l, y, u, full).confidence);
}

TEST(SpreadLabelsTest, ExactOnDisconnectedComponents) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.1);
  FeatureMatrix unlabeled;
  std::vector<ClassId> truth;
  for (int i = 0; i < 60; ++i) {
    const int side = i % 3;
    unlabeled.append(std::vector<double>{side * 100.0 + n(rng), n(rng)});
    truth.push_back(side == 1 ? 0 : side == 2 ? 2 : 1);
  }
  const auto labeled = rows({{0.0, 0.0}, {100.0, 0.0}, {200.0, 0.0}});
  const auto r = spread_labels(labeled, std::vector<ClassId>{1, 0, 2}, unlabeled, SpreadConfig{});
  EXPECT_EQ(r.labels, truth);
}

TEST(SpreadLabelsTest, MemoryPointInsideWindowIsOneNode) {
  SlidingWindow w(4);
  for (StreamIndex i = 0; i < 4; ++i) w.push(DataPoint(i, {static_cast<double>(i)}));
  LabelMemory m(2);
  const std::vector<LabeledPoint> seeds{{w[0], 1}, {w[3], 0}};
  m.insert(seeds);
  const auto r = spread_labels(m, w, SpreadConfig{});
  ASSERT_EQ(r.labels.size(), 4u);
  EXPECT_EQ(r.labels.front(), 1);
  EXPECT_EQ(r.labels.back(), 0);
}

TEST(SpreadLabelsTest, ErrorsOnBadInput) {
  SlidingWindow w(2);
  w.push(DataPoint(0, {0.0}));
  EXPECT_THROW(spread_labels(LabelMemory(3), w, SpreadConfig{}), InvalidArgument);
  SpreadConfig bad;
  bad.alpha = 1.0;
  EXPECT_THROW(spread_labels(rows({{0.0}}), std::vector<ClassId>{0}, rows({{1.0}}), bad), InvalidArgument);
  EXPECT_THROW(spread_labels(rows({{0.0}}), std::vector<ClassId>{0}, rows({{1.0, 2.0}}), SpreadConfig{}),
               ShapeError);
}

TEST(SpreadLabelsTest, RowsAreDistributions) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureMatrix labeled, unlabeled;
  std::vector<ClassId> y;
  for (int i = 0; i < 10; ++i) {
    labeled.append(std::vector<double>{u(rng), u(rng)});
    y.push_back(i % 3);
  }
  for (int i = 0; i < 300; ++i) unlabeled.append(std::vector<double>{u(rng), u(rng)});
  const auto r = spread_labels(labeled, y, unlabeled, SpreadConfig{});
  for (const auto& row : r.confidence) {
    double s = 0.0;
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_LE(r.iterations, 30u);
}

}  // namespace
}  // namespace seer
