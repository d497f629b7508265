#include "seer/stream.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "seer/error.hpp"

namespace seer {
namespace {

DataPoint pt(StreamIndex i, double x = 0.0) { return DataPoint(i, {x, x}); }

TEST(DataPointTest, RejectsNonFiniteFeatures) {
  EXPECT_THROW(DataPoint(0, {1.0, std::nan("")}), InvalidArgument);
  EXPECT_THROW(DataPoint(0, {std::numeric_limits<double>::infinity()}), InvalidArgument);
  EXPECT_THROW(DataPoint(0, {1.0}, -1), InvalidArgument);
}

TEST(DataPointTest, EqualityIsByIndex) {
  EXPECT_EQ(DataPoint(4, {1.0}), DataPoint(4, {2.0, 3.0}));
  EXPECT_NE(DataPoint(4, {1.0}), DataPoint(5, {1.0}));
}

TEST(DataPointTest, LabelOnlyThroughGroundTruth) {
  const DataPoint p(1, {0.5}, 1);
  EXPECT_EQ(GroundTruth::label(p), 1);
  EXPECT_EQ(GroundTruth::label(GroundTruth::without_label(p)), std::nullopt);
  EXPECT_EQ(GroundTruth::label(DataPoint(2, {0.1})), std::nullopt);
}

TEST(SlidingWindowTest, KeepsLatestInOrder) {
  SlidingWindow w(3);
  for (StreamIndex i = 0; i < 5; ++i) w.push(pt(i));
  ASSERT_EQ(w.size(), 3u);
  EXPECT_TRUE(w.full());
  EXPECT_EQ(w[0].index(), 2u);
  EXPECT_EQ(w[2].index(), 4u);
}

TEST(SlidingWindowTest, RejectsNonIncreasingIndex) {
  SlidingWindow w(3);
  w.push(pt(5));
  EXPECT_THROW(w.push(pt(5)), OrderingError);
  EXPECT_THROW(w.push(pt(4)), OrderingError);
  EXPECT_EQ(w.size(), 1u);
}

TEST(SlidingWindowTest, RejectsDimensionChange) {
  SlidingWindow w(3);
  w.push(pt(0));
  EXPECT_THROW(w.push(DataPoint(1, {1.0})), ShapeError);
}

TEST(LabelMemoryTest, EvictsOldestPastCapacity) {
  LabelMemory m(15);
  std::vector<LabeledPoint> batch;
  for (StreamIndex i = 0; i < 20; ++i) batch.push_back({pt(i), static_cast<ClassId>(i % 2)});
  m.insert(std::span(batch).first(10));
  EXPECT_EQ(m.size(), 10u);
  m.insert(std::span(batch).subspan(10));
  ASSERT_EQ(m.size(), 15u);
  EXPECT_EQ(m.entries().front().point.index(), 5u);
  EXPECT_EQ(m.entries().back().point.index(), 19u);
}

TEST(LabelMemoryTest, DefaultPipelineCapacity) {
  LabelMemory m(15);
  EXPECT_EQ(m.capacity(), 15u);
}

TEST(FeatureMatrixTest, AppendChecksWidth) {
  FeatureMatrix m;
  m.append(std::vector<double>{1.0, 2.0});
  EXPECT_THROW(m.append(std::vector<double>{1.0}), ShapeError);
  EXPECT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.cols(), 2u);
}

TEST(DistanceTest, MatchesHandComputation) {
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{3.0, 4.0};
  EXPECT_DOUBLE_EQ(squared_distance(a, b), 25.0);
  EXPECT_DOUBLE_EQ(euclidean_distance(a, b), 5.0);
}

}  // namespace
}  // namespace seer
