#include "seer/change_detectors.hpp"

#include <cmath>
#include <limits>

namespace seer {

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::page_hinkley:
      return "pht";
    case DetectorKind::ddm:
      return "ddm";
  }
  return "unknown";
}

std::optional<DetectorKind> parse_detector_kind(std::string_view name) noexcept {
  if (name == "pht" || name == "page_hinkley") return DetectorKind::page_hinkley;
  if (name == "ddm") return DetectorKind::ddm;
  return std::nullopt;
}

PageHinkley::PageHinkley(PageHinkleyParams params) : params_(params) {
  if (!(params.delta >= 0.0)) throw InvalidArgument("page-hinkley delta must be >= 0");
  if (!(params.lambda > 0.0)) throw InvalidArgument("page-hinkley lambda must be > 0");
  if (!(params.alpha > 0.0 && params.alpha <= 1.0)) {
    throw InvalidArgument("page-hinkley alpha must lie in (0, 1]");
  }
}

std::optional<Alarm> PageHinkley::update(double value, StreamIndex index) {
  if (!std::isfinite(value)) throw InvalidArgument("page-hinkley input must be finite");

  ++count_;
  weight_ = params_.alpha * weight_ + 1.0;
  mean_ += (value - mean_) / weight_;
  cumulative_ += value - mean_ - params_.delta;
  if (cumulative_ < minimum_) minimum_ = cumulative_;

  const double stat = cumulative_ - minimum_;
  if (stat >= params_.lambda) {
    reset();
    return Alarm{index, DetectorKind::page_hinkley, stat};
  }
  return std::nullopt;
}

void PageHinkley::reset() noexcept {
  weight_ = 0.0;
  mean_ = 0.0;
  cumulative_ = 0.0;
  minimum_ = 0.0;
  count_ = 0;
}

Ddm::Ddm(DdmParams params)
    : params_(params),
      p_min_(std::numeric_limits<double>::infinity()),
      s_min_(std::numeric_limits<double>::infinity()) {
  if (!(params.warning_level > 0.0 && params.alarm_level >= params.warning_level)) {
    throw InvalidArgument("ddm levels must satisfy 0 < warning <= alarm");
  }
}

double Ddm::error_rate() const noexcept {
  return count_ == 0 ? 0.0 : static_cast<double>(errors_) / static_cast<double>(count_);
}

double Ddm::std_dev() const noexcept {
  if (count_ == 0) return 0.0;
  const double p = error_rate();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(count_));
}

DriftLevel Ddm::update(bool error) noexcept {
  ++count_;
  if (error) ++errors_;
  if (count_ < params_.warmup) return DriftLevel::stable;

  const double p = error_rate();
  const double s = std_dev();
  if (p + s < p_min_ + s_min_) {
    p_min_ = p;
    s_min_ = s;
  }
  // Strict comparisons: on an error-free prefix p_min = s_min = 0 and p + s == 0
  // must stay stable.
  if (p + s > p_min_ + params_.alarm_level * s_min_) {
    reset();
    return DriftLevel::alarm;
  }
  if (p + s > p_min_ + params_.warning_level * s_min_) return DriftLevel::warning;
  return DriftLevel::stable;
}

void Ddm::reset() noexcept {
  count_ = 0;
  errors_ = 0;
  p_min_ = std::numeric_limits<double>::infinity();
  s_min_ = std::numeric_limits<double>::infinity();
}

namespace {

std::variant<PageHinkley, Ddm> make_detector(const DetectorConfig& config) {
  if (config.kind == DetectorKind::ddm) return Ddm(config.ddm);
  return PageHinkley(config.page_hinkley);
}

}  // namespace

ChangeDetector::ChangeDetector(const DetectorConfig& config) : impl_(make_detector(config)) {}

std::optional<Alarm> ChangeDetector::update(double value, StreamIndex index) {
  if (auto* pht = std::get_if<PageHinkley>(&impl_)) return pht->update(value, index);

  auto& ddm = std::get<Ddm>(impl_);
  if (value != 0.0 && value != 1.0) throw InvalidArgument("ddm expects error bits (0 or 1)");
  // The alarm resets the detector, so the triggering p + s is computed up front.
  const double n = static_cast<double>(ddm.count() + 1);
  const double p = static_cast<double>(ddm.errors() + (value == 1.0 ? 1 : 0)) / n;
  const double level = p + std::sqrt(p * (1.0 - p) / n);
  if (ddm.update(value == 1.0) == DriftLevel::alarm) {
    return Alarm{index, DetectorKind::ddm, level};
  }
  return std::nullopt;
}

void ChangeDetector::reset() noexcept {
  std::visit([](auto& d) { d.reset(); }, impl_);
}

DetectorKind ChangeDetector::kind() const noexcept {
  return std::holds_alternative<PageHinkley>(impl_) ? DetectorKind::page_hinkley
                                                    : DetectorKind::ddm;
}

}  // namespace seer
