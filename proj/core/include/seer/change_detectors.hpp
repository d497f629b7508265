#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <variant>

#include "seer/stream.hpp"

namespace seer {

enum class DetectorKind { page_hinkley, ddm };

std::string_view to_string(DetectorKind kind) noexcept;
std::optional<DetectorKind> parse_detector_kind(std::string_view name) noexcept;

struct Alarm {
  StreamIndex index = 0;
  DetectorKind kind = DetectorKind::page_hinkley;
  double statistic = 0.0;

  friend bool operator==(const Alarm&, const Alarm&) = default;
};

struct PageHinkleyParams {
  double delta = 0.005;   // magnitude tolerance
  double lambda = 50.0;   // alarm threshold
  double alpha = 0.9999;  // forgetting factor of the running mean, in (0, 1]

  friend bool operator==(const PageHinkleyParams&, const PageHinkleyParams&) = default;
};

/// One-sided Page-Hinkley test watching for increases of the input mean.
///
/// The running mean is exponentially forgotten: with weight W_t = alpha * W_{t-1} + 1
/// it moves by (x - mean) / W_t, which is the plain arithmetic mean for alpha = 1.
/// The cumulative statistic m_T accumulates (x - mean - delta) and an alarm fires
/// when m_T - min_t m_t reaches lambda, after which the test restarts from scratch.
class PageHinkley {
 public:
  explicit PageHinkley(PageHinkleyParams params = {});

  /// Throws InvalidArgument on a non-finite value.
  std::optional<Alarm> update(double value, StreamIndex index = 0);
  void reset() noexcept;

  const PageHinkleyParams& params() const noexcept { return params_; }
  double mean() const noexcept { return mean_; }
  double cumulative() const noexcept { return cumulative_; }
  double minimum() const noexcept { return minimum_; }
  /// m_T - min m_t, the quantity compared against lambda.
  double statistic() const noexcept { return cumulative_ - minimum_; }
  std::size_t count() const noexcept { return count_; }

  friend bool operator==(const PageHinkley&, const PageHinkley&) = default;

 private:
  PageHinkleyParams params_;
  double weight_ = 0.0;
  double mean_ = 0.0;
  double cumulative_ = 0.0;
  double minimum_ = 0.0;
  std::size_t count_ = 0;
};

struct DdmParams {
  std::size_t warmup = 30;
  double warning_level = 2.0;
  double alarm_level = 3.0;

  friend bool operator==(const DdmParams&, const DdmParams&) = default;
};

enum class DriftLevel { stable, warning, alarm };

/// Drift Detection Method over a binary error stream.
class Ddm {
 public:
  explicit Ddm(DdmParams params = {});

  DriftLevel update(bool error) noexcept;
  void reset() noexcept;

  const DdmParams& params() const noexcept { return params_; }
  std::size_t count() const noexcept { return count_; }
  std::size_t errors() const noexcept { return errors_; }
  double error_rate() const noexcept;
  double std_dev() const noexcept;
  double min_error_rate() const noexcept { return p_min_; }
  double min_std_dev() const noexcept { return s_min_; }

  friend bool operator==(const Ddm&, const Ddm&) = default;

 private:
  DdmParams params_;
  std::size_t count_ = 0;
  std::size_t errors_ = 0;
  double p_min_;
  double s_min_;
};

struct DetectorConfig {
  DetectorKind kind = DetectorKind::page_hinkley;
  PageHinkleyParams page_hinkley;
  DdmParams ddm;
};

/// Runtime-selected detector behind one update call. DDM reads the value as an
/// error bit and rejects anything other than 0 or 1.
class ChangeDetector {
 public:
  explicit ChangeDetector(const DetectorConfig& config);

  std::optional<Alarm> update(double value, StreamIndex index);
  void reset() noexcept;
  DetectorKind kind() const noexcept;

  const std::variant<PageHinkley, Ddm>& state() const noexcept { return impl_; }

 private:
  std::variant<PageHinkley, Ddm> impl_;
};

}  // namespace seer
