#include "seer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

namespace seer {

namespace {

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum SeedStream : std::uint64_t { kmeans_stream = 1, sample_stream = 2, inspector_stream = 3, online_stream = 4 };

std::vector<DataPoint> window_points(const SlidingWindow& w) {
  return {w.points().begin(), w.points().end()};
}

}  // namespace

void SeerConfig::validate() const {
  std::ostringstream problems;
  if (window_size == 0) problems << "window_size must be positive\n";
  if (memory_capacity == 0) problems << "memory_capacity must be positive\n";
  if (per_stratum == 0) problems << "per_stratum must be at least 1\n";
  if (!(label_budget > 0.0 && label_budget <= 1.0)) problems << "label_budget must lie in (0, 1]\n";
  if (detector.kind == DetectorKind::page_hinkley) {
    const auto& p = detector.page_hinkley;
    if (!(p.delta >= 0.0)) problems << "page_hinkley.delta must be >= 0\n";
    if (!(p.lambda > 0.0)) problems << "page_hinkley.lambda must be > 0\n";
    if (!(p.alpha > 0.0 && p.alpha <= 1.0)) problems << "page_hinkley.alpha must lie in (0, 1]\n";
  }
  if (spread.k == 0) problems << "spread.k must be at least 1\n";
  if (!(spread.alpha > 0.0 && spread.alpha < 1.0)) problems << "spread.alpha must lie in (0, 1)\n";
  for (const auto* t : {&online_training, &inspector_training}) {
    if (t->n_trees == 0) problems << "forest n_trees must be at least 1\n";
    if (t->min_samples_split < 2) problems << "forest min_samples_split must be at least 2\n";
  }
  const auto text = problems.str();
  if (!text.empty()) throw ConfigError(text);
}

Seer::Seer(std::shared_ptr<const ClassifierModel> online, std::shared_ptr<const ClassifierModel> inspector,
           EpsilonEstimate epsilon, SeerConfig cfg, RetrainLabeler retrain_labeler)
    : cfg_(std::move(cfg)),
      online_(std::move(online)),
      inspector_(std::move(inspector)),
      epsilon_(std::move(epsilon)),
      retrain_labeler_(std::move(retrain_labeler)),
      window_(cfg_.window_size == 0 ? 1 : cfg_.window_size),
      memory_(cfg_.memory_capacity == 0 ? 1 : cfg_.memory_capacity),
      detector_(cfg_.detector) {
  cfg_.validate();
  if (!online_ || !inspector_) throw InvalidArgument("both models are required");
  if (online_->dim() != inspector_->dim()) {
    throw ShapeError("online model expects " + std::to_string(online_->dim()) +
                     " features, inspector " + std::to_string(inspector_->dim()));
  }
  if (!(epsilon_.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
}

std::uint64_t Seer::derive_seed(std::uint64_t stream, std::uint64_t counter) const noexcept {
  return mix(mix(cfg_.seed ^ (stream << 56)) ^ counter);
}

StepOutcome Seer::step(const DataPoint& x) {
  if (x.dim() != online_->dim()) {
    throw ShapeError("stream point " + std::to_string(x.index()) + " has " + std::to_string(x.dim()) +
                     " features, models expect " + std::to_string(online_->dim()));
  }

  StepOutcome out;
  out.index = x.index();
  out.y_online = online_->predict(x.features());
  out.y_inspector = inspector_->predict(x.features());
  out.error = disagreement(out.y_online, out.y_inspector);

  window_.push(x);
  ++steps_;

  out.alarm = detector_.update(static_cast<double>(out.error), x.index());
  if (out.alarm) {
    alarms_.push_back(*out.alarm);
    // The detector restarts itself; the inspector is only refit at the next
    // spreading event.
    if (cfg_.retrain_online_on_alarm && retrain_labeler_) {
      const auto labeled = retrain_labeler_(window_points(window_));
      if (!labeled.empty()) {
        TrainConfig tc = cfg_.online_training;
        tc.seed = derive_seed(online_stream, online_retrains_);
        online_ = std::make_shared<const ClassifierModel>(train(labeled, tc));
        ++online_retrains_;
        out.online_retrained = true;
      }
    }
  }

  out.request = maybe_request(x.index());
  return out;
}

std::optional<LabelRequest> Seer::maybe_request(StreamIndex index) {
  if (steps_ % cfg_.effective_sampling_period() != 0 || !window_.full()) return std::nullopt;

  const auto event = steps_ / cfg_.effective_sampling_period();
  const auto features = FeatureMatrix::from_points(window_.points());
  if (cfg_.reestimate_epsilon) epsilon_ = estimate_epsilon(features);

  ClusterConfig cc;
  cc.window_size = cfg_.window_size;
  cc.seed = derive_seed(kmeans_stream, event);
  auto clustering = cluster_window(features, epsilon_, cc);
  if (!clustering) return std::nullopt;

  auto candidates =
      stratified_sample(*clustering, window_, cfg_.per_stratum, derive_seed(sample_stream, event));
  if (candidates.empty()) return std::nullopt;

  LabelRequest request;
  request.id = next_request_id_++;
  request.issued_at = index;
  request.candidates = std::move(candidates);
  open_requests_.emplace(request.id, request.candidates);
  return request;
}

void Seer::ingest_labels(const LabelAnswer& answer) {
  auto it = open_requests_.find(answer.request_id);
  if (it == open_requests_.end()) {
    throw InvalidArgument("unknown label request " + std::to_string(answer.request_id));
  }
  const auto& requested = it->second;
  for (const auto& [index, label] : answer.labels) {
    const bool known = std::any_of(requested.begin(), requested.end(),
                                   [&](const DataPoint& p) { return p.index() == index; });
    if (!known) {
      throw InvalidArgument("label for stream index " + std::to_string(index) +
                            " was not part of request " + std::to_string(answer.request_id));
    }
    if (label < 0) throw InvalidArgument("class ids must be non-negative");
  }

  // Staleness guard: answers older than one window behind the window are dropped.
  const StreamIndex oldest = window_.empty() ? 0 : window_[0].index();
  const StreamIndex horizon = oldest > cfg_.window_size ? oldest - cfg_.window_size : 0;

  std::vector<std::pair<StreamIndex, ClassId>> sorted = answer.labels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               sorted.end());

  std::set<StreamIndex> in_memory;
  for (const auto& e : memory_.entries()) in_memory.insert(e.point.index());

  std::vector<LabeledPoint> fresh;
  for (const auto& [index, label] : sorted) {
    if (index < horizon || in_memory.contains(index)) continue;
    const auto& point = *std::find_if(requested.begin(), requested.end(),
                                      [&](const DataPoint& p) { return p.index() == index; });
    fresh.push_back({point, label});
  }
  open_requests_.erase(it);
  if (fresh.empty()) return;

  memory_.insert(fresh);
  labels_ingested_ += fresh.size();

  const auto spread = spread_labels(memory_, window_, cfg_.spread);
  const auto features = FeatureMatrix::from_points(window_.points());
  TrainConfig tc = cfg_.inspector_training;
  tc.seed = derive_seed(inspector_stream, inspector_retrains_);
  inspector_ = std::make_shared<const ClassifierModel>(train(features, spread.labels, tc));
  // The offline inspector is a copy of the training concept; monitoring is anchored to
  // the disagreement level of the first spread-trained inspector instead.
  if (inspector_retrains_ == 0) detector_.reset();
  ++inspector_retrains_;
}

Seer make_seer(std::span<const LabeledPoint> training, const SeerConfig& cfg,
               RetrainLabeler retrain_labeler) {
  cfg.validate();
  if (training.empty()) throw TrainingError("make_seer needs training data");

  TrainConfig online_cfg = cfg.online_training;
  TrainConfig inspector_cfg = cfg.inspector_training;
  online_cfg.seed = mix(cfg.seed ^ 0x6f6e6c696e65ULL);
  inspector_cfg.seed = mix(cfg.seed ^ 0x696e73706563ULL);

  auto online = std::make_shared<const ClassifierModel>(train(training, online_cfg));
  const std::size_t tail = std::min(cfg.window_size, training.size());
  auto inspector =
      std::make_shared<const ClassifierModel>(train(training.last(tail), inspector_cfg));
  auto eps = estimate_epsilon(FeatureMatrix::from_points(training));
  return Seer(std::move(online), std::move(inspector), std::move(eps), cfg,
              std::move(retrain_labeler));
}

LabelOracle::LabelOracle(OracleConfig cfg) : cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.policy == OraclePolicy::fraction && !(cfg_.fraction >= 0.0 && cfg_.fraction <= 1.0)) {
    throw InvalidArgument("oracle fraction must lie in [0, 1]");
  }
  if (cfg_.policy == OraclePolicy::budget_capped &&
      !(cfg_.budget_fraction > 0.0 && cfg_.budget_fraction <= 1.0)) {
    throw InvalidArgument("oracle budget fraction must lie in (0, 1]");
  }
}

std::size_t LabelOracle::budget() const noexcept {
  return static_cast<std::size_t>(
      std::floor(cfg_.budget_fraction * static_cast<double>(cfg_.stream_length) + 1e-9));
}

LabelAnswer LabelOracle::answer(const LabelRequest& request) {
  const std::size_t n = request.candidates.size();
  std::size_t take = n;
  switch (cfg_.policy) {
    case OraclePolicy::all:
      break;
    case OraclePolicy::fraction:
      take = static_cast<std::size_t>(std::floor(cfg_.fraction * static_cast<double>(n) + 0.5));
      break;
    case OraclePolicy::budget_capped: {
      const std::size_t cap = budget();
      take = answered_ >= cap ? 0 : std::min(n, cap - answered_);
      break;
    }
  }

  std::vector<std::size_t> chosen(n);
  for (std::size_t i = 0; i < n; ++i) chosen[i] = i;
  if (take < n) {
    std::shuffle(chosen.begin(), chosen.end(), rng_);
    chosen.resize(take);
    std::sort(chosen.begin(), chosen.end());
  }

  LabelAnswer out;
  out.request_id = request.id;
  for (std::size_t i : chosen) {
    const auto& p = request.candidates[i];
    const auto truth = GroundTruth::label(p);
    if (!truth) continue;
    out.labels.emplace_back(p.index(), *truth);
  }
  answered_ += out.labels.size();
  return out;
}

std::vector<LabeledPoint> LabelOracle::label_all(const std::vector<DataPoint>& points) const {
  std::vector<LabeledPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (auto truth = GroundTruth::label(p)) out.push_back({p, *truth});
  }
  return out;
}

}  // namespace seer
