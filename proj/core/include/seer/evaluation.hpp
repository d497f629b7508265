#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seer/change_detectors.hpp"
#include "seer/classifiers.hpp"
#include "seer/datasets.hpp"
#include "seer/pipeline.hpp"

namespace seer {

enum class Mode { none, supervised_pht, cdseer, pht_no_retrain_gt };

std::string_view to_string(Mode mode) noexcept;
std::optional<Mode> parse_mode(std::string_view name) noexcept;

/// One test-stream step as seen by the evaluator.
struct RunRecord {
  StreamIndex index = 0;
  ClassId y_online = 0;
  std::optional<ClassId> y_inspector;  // cdseer runs only
  ClassId y_true = 0;
  int error = 0;  // the bit the detector consumed
  bool alarm = false;
  bool requested = false;  // a label request was issued at this step
  bool labeled = false;    // expert labels were ingested at this step
  std::size_t labels_used = 0;  // cumulative

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunLog {
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;

  std::vector<StreamIndex> alarm_indices() const;
};

/// CSV with header `index,y_online,y_insp,y_true,error,alarm,requested,labeled,labels_used`;
/// y_insp is empty when no inspector ran.
void write_run_log(std::ostream& out, const RunLog& log);
/// Throws ParseError naming the offending 1-based row.
RunLog read_run_log(std::istream& in);

struct DriftMatch {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<std::pair<StreamIndex, StreamIndex>> pairs;  // (ground truth, detection)
};

/// Greedy earliest-first matching: detection d claims the earliest unmatched ground
/// truth g with g <= d <= g + horizon. Inputs must be sorted ascending.
DriftMatch match_drifts(std::span<const StreamIndex> detected, std::span<const StreamIndex> ground_truth,
                        std::size_t horizon);

/// Percentages. precision / recall are nullopt when undefined (no detections / no drifts).
struct Metrics {
  double macc = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  double lbl = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t alarms = 0;
  std::size_t labels_used = 0;
  std::size_t test_length = 0;
  std::vector<std::pair<StreamIndex, StreamIndex>> pairs;
};

Metrics compute_metrics(const RunLog& log, std::span<const StreamIndex> ground_truth, std::size_t horizon);

/// Mean of the per-seed percentages (precision / recall over the seeds where they are
/// defined); counts are summed.
Metrics aggregate(std::span<const Metrics> per_seed);

struct ExperimentConfig {
  Mode mode = Mode::cdseer;
  std::size_t train_size = 1000;    // labeled prefix used to fit the online model
  std::size_t retrain_size = 1000;  // most recent labeled points used after an alarm
  std::size_t horizon = 2000;
  TrainConfig online_training;
  PageHinkleyParams supervised_detector;  // supervised_pht / pht_no_retrain_gt
  // cdseer; the online model is retrained on alarms as in the supervised baseline
  SeerConfig seer = [] {
    SeerConfig c;
    c.retrain_online_on_alarm = true;
    return c;
  }();
  OracleConfig oracle;  // cdseer; the budget comes from seer.label_budget, length and seed per run
  bool parallel = true;

  /// Throws ConfigError naming every invalid field.
  void validate() const;
};

struct SeedRun {
  std::uint64_t seed = 0;
  Metrics metrics;
  RunLog log;
  std::vector<StreamIndex> ground_truth;
};

struct Report {
  std::string name;
  StreamSpec stream;
  ExperimentConfig config;
  std::vector<SeedRun> runs;
  Metrics aggregate;

  /// JSON document with per-seed metrics, the aggregate and a config snapshot.
  /// `generated_at` is the only time-dependent field.
  std::string to_json(std::string_view generated_at = {}) const;
  static std::string summary_csv_header();
  std::string summary_csv_row() const;
};

/// Single seed: trains on the stream prefix, runs the mode over the rest.
SeedRun run_seed(const StreamSpec& stream, const ExperimentConfig& cfg, std::uint64_t seed);

/// Each seed regenerates synthetic streams with that seed and reseeds every model.
/// Ground truth is the schedule's drift indices past the training prefix, or, when the
/// stream has no schedule, the alarms of a PHT run without retraining.
Report run_experiment(const StreamSpec& stream, const ExperimentConfig& cfg,
                      std::span<const std::uint64_t> seeds, std::string name = {});

struct GridCell {
  std::size_t window_size;
  std::size_t memory_capacity;
};

/// Window {500, 1000} x memory {10, 15}.
std::vector<GridCell> sensitivity_grid();

std::vector<Report> run_sensitivity_grid(const StreamSpec& stream, const ExperimentConfig& base,
                                         std::span<const std::uint64_t> seeds,
                                         std::span<const GridCell> cells);

}  // namespace seer
