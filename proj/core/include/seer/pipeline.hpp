#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "seer/change_detectors.hpp"
#include "seer/classifiers.hpp"
#include "seer/clustering.hpp"
#include "seer/propagation.hpp"
#include "seer/stream.hpp"

namespace seer {

struct SeerConfig {
  std::size_t window_size = 1000;
  std::size_t memory_capacity = 15;
  DetectorConfig detector;
  std::size_t sampling_period = 0;  // 0 = window_size
  std::size_t per_stratum = 1;
  double label_budget = 0.01;  // fraction of the stream the expert may be asked to label
  bool retrain_online_on_alarm = false;
  bool reestimate_epsilon = false;  // re-run knee detection on every window that is clustered
  TrainConfig online_training;
  TrainConfig inspector_training;
  SpreadConfig spread;
  std::uint64_t seed = 1;

  std::size_t effective_sampling_period() const noexcept {
    return sampling_period != 0 ? sampling_period : window_size;
  }
  /// Throws ConfigError naming every invalid field.
  void validate() const;
};

struct LabelRequest {
  std::uint64_t id = 0;
  StreamIndex issued_at = 0;
  std::vector<DataPoint> candidates;
};

struct LabelAnswer {
  std::uint64_t request_id = 0;
  std::vector<std::pair<StreamIndex, ClassId>> labels;
};

struct StepOutcome {
  StreamIndex index = 0;
  ClassId y_online = 0;
  ClassId y_inspector = 0;
  int error = 0;  // disagreement(y_online, y_inspector)
  std::optional<Alarm> alarm;
  std::optional<LabelRequest> request;
  bool online_retrained = false;
};

/// Supplies ground-truth labels for retraining the online model after an alarm.
using RetrainLabeler = std::function<std::vector<LabeledPoint>(const std::vector<DataPoint>&)>;

/// Online concept-drift monitor for one stream.
///
/// Every point is classified by the online and the inspector model and their
/// disagreement bit feeds a change detector. Every sampling period (once the window
/// is full) the window is clustered and one stratified sample per cluster is issued
/// as a label request. Answers enter the label memory, are spread over the window and
/// the inspector is refit on the result. Requests are asynchronous: the stream keeps
/// flowing while they are open.
class Seer {
 public:
  Seer(std::shared_ptr<const ClassifierModel> online, std::shared_ptr<const ClassifierModel> inspector,
       EpsilonEstimate epsilon, SeerConfig cfg, RetrainLabeler retrain_labeler = {});

  /// Throws ShapeError when x has the wrong dimensionality.
  StepOutcome step(const DataPoint& x);

  /// Throws InvalidArgument for an unknown request id or a label for a point that was
  /// not requested. Labels for points that fell out of the staleness range are dropped.
  void ingest_labels(const LabelAnswer& answer);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t labels_ingested() const noexcept { return labels_ingested_; }
  std::size_t inspector_retrains() const noexcept { return inspector_retrains_; }
  std::size_t online_retrains() const noexcept { return online_retrains_; }
  const std::vector<Alarm>& alarms() const noexcept { return alarms_; }
  const SlidingWindow& window() const noexcept { return window_; }
  const LabelMemory& memory() const noexcept { return memory_; }
  const ChangeDetector& detector() const noexcept { return detector_; }
  const ClassifierModel& online_model() const noexcept { return *online_; }
  const ClassifierModel& inspector_model() const noexcept { return *inspector_; }
  const EpsilonEstimate& epsilon() const noexcept { return epsilon_; }
  const SeerConfig& config() const noexcept { return cfg_; }
  std::size_t open_requests() const noexcept { return open_requests_.size(); }

 private:
  std::optional<LabelRequest> maybe_request(StreamIndex index);
  std::uint64_t derive_seed(std::uint64_t stream, std::uint64_t counter) const noexcept;

  SeerConfig cfg_;
  std::shared_ptr<const ClassifierModel> online_;
  std::shared_ptr<const ClassifierModel> inspector_;
  EpsilonEstimate epsilon_;
  RetrainLabeler retrain_labeler_;
  SlidingWindow window_;
  LabelMemory memory_;
  ChangeDetector detector_;
  std::map<std::uint64_t, std::vector<DataPoint>> open_requests_;
  std::vector<Alarm> alarms_;
  std::uint64_t next_request_id_ = 1;
  std::size_t steps_ = 0;
  std::size_t labels_ingested_ = 0;
  std::size_t inspector_retrains_ = 0;
  std::size_t online_retrains_ = 0;
};

/// Trains the online model on all of `training`, the inspector on its last
/// window_size points, and estimates epsilon from the training features.
Seer make_seer(std::span<const LabeledPoint> training, const SeerConfig& cfg,
               RetrainLabeler retrain_labeler = {});

enum class OraclePolicy { all, fraction, budget_capped };

struct OracleConfig {
  OraclePolicy policy = OraclePolicy::budget_capped;
  double fraction = 1.0;         // share of candidates answered under `fraction`
  double budget_fraction = 0.01;  // cap on answered labels / stream_length under `budget_capped`
  std::size_t stream_length = 0;
  std::uint64_t seed = 0;
};

/// Simulated expert with ground-truth access.
class LabelOracle {
 public:
  explicit LabelOracle(OracleConfig cfg);

  LabelAnswer answer(const LabelRequest& request);
  /// Ground truth for retraining; not counted against the label budget.
  std::vector<LabeledPoint> label_all(const std::vector<DataPoint>& points) const;

  std::size_t answered() const noexcept { return answered_; }
  std::size_t budget() const noexcept;

 private:
  OracleConfig cfg_;
  std::mt19937_64 rng_;
  std::size_t answered_ = 0;
};

}  // namespace seer
