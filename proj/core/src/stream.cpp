#include "seer/stream.hpp"

#include <cmath>
#include <string>

namespace seer {

namespace {

void check_finite(const std::vector<double>& features, StreamIndex index) {
  for (double v : features) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("non-finite feature value at stream index " + std::to_string(index));
    }
  }
}

}  // namespace

DataPoint::DataPoint(StreamIndex index, std::vector<double> features)
    : index_(index), features_(std::move(features)) {
  check_finite(features_, index_);
}

DataPoint::DataPoint(StreamIndex index, std::vector<double> features, ClassId true_label)
    : index_(index), features_(std::move(features)), true_label_(true_label) {
  check_finite(features_, index_);
  if (true_label < 0) throw InvalidArgument("class ids must be non-negative");
}

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("window capacity must be positive");
}

void SlidingWindow::push(DataPoint x) {
  if (last_index_ && x.index() <= *last_index_) {
    throw OrderingError("window push out of order: index " + std::to_string(x.index()) +
                        " after " + std::to_string(*last_index_));
  }
  if (!buffer_.empty() && x.dim() != buffer_.front().dim()) {
    throw ShapeError("window push with dimensionality " + std::to_string(x.dim()) +
                     ", expected " + std::to_string(buffer_.front().dim()));
  }
  last_index_ = x.index();
  buffer_.push_back(std::move(x));
  if (buffer_.size() > capacity_) buffer_.pop_front();
}

LabelMemory::LabelMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("memory capacity must be positive");
}

void LabelMemory::insert(std::span<const LabeledPoint> pts) {
  for (const auto& p : pts) queue_.push_back(p);
  while (queue_.size() > capacity_) queue_.pop_front();
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

void FeatureMatrix::append(std::span<const double> row) {
  if (rows_ == 0 && data_.empty()) {
    cols_ = row.size();
  } else if (row.size() != cols_) {
    throw ShapeError("feature row of length " + std::to_string(row.size()) + ", expected " +
                     std::to_string(cols_));
  }
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace seer
