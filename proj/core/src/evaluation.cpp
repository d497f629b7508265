#include "seer/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace seer {

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::none:
      return "none";
    case Mode::supervised_pht:
      return "supervised_pht";
    case Mode::cdseer:
      return "cdseer";
    case Mode::pht_no_retrain_gt:
      return "pht_no_retrain_gt";
  }
  return "unknown";
}

std::optional<Mode> parse_mode(std::string_view name) noexcept {
  for (Mode m : {Mode::none, Mode::supervised_pht, Mode::cdseer, Mode::pht_no_retrain_gt}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

std::vector<StreamIndex> RunLog::alarm_indices() const {
  std::vector<StreamIndex> out;
  for (const auto& r : records) {
    if (r.alarm) out.push_back(r.index);
  }
  return out;
}

void write_run_log(std::ostream& out, const RunLog& log) {
  out << "index,y_online,y_insp,y_true,error,alarm,requested,labeled,labels_used\n";
  for (const auto& r : log.records) {
    out << r.index << ',' << r.y_online << ',';
    if (r.y_inspector) out << *r.y_inspector;
    out << ',' << r.y_true << ',' << r.error << ',' << (r.alarm ? 1 : 0) << ','
        << (r.requested ? 1 : 0) << ',' << (r.labeled ? 1 : 0) << ',' << r.labels_used << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::uint64_t parse_uint(const std::string& cell, std::size_t row, std::string_view column) {
  if (cell.empty() || !std::all_of(cell.begin(), cell.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("row " + std::to_string(row) + ": column '" + std::string(column) +
                         "' expects a non-negative integer, found '" + cell + "'",
                     row);
  }
  return std::stoull(cell);
}

bool parse_flag(const std::string& cell, std::size_t row, std::string_view column) {
  const auto v = parse_uint(cell, row, column);
  if (v > 1) {
    throw ParseError("row " + std::to_string(row) + ": column '" + std::string(column) + "' must be 0 or 1",
                     row);
  }
  return v == 1;
}

}  // namespace

RunLog read_run_log(std::istream& in) {
  static constexpr std::string_view columns[] = {"index", "y_online", "y_insp", "y_true", "error",
                                                 "alarm", "requested", "labeled", "labels_used"};
  RunLog log;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw ParseError("empty run log", 0);
  ++row;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() != std::size(columns) || !std::equal(header.begin(), header.end(), std::begin(columns))) {
    throw ParseError("row 1: unexpected run log header", 1);
  }
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != std::size(columns)) {
      throw ParseError("row " + std::to_string(row) + ": expected 9 columns, found " +
                           std::to_string(cells.size()),
                       row);
    }
    RunRecord r;
    r.index = parse_uint(cells[0], row, columns[0]);
    r.y_online = static_cast<ClassId>(parse_uint(cells[1], row, columns[1]));
    if (!cells[2].empty()) r.y_inspector = static_cast<ClassId>(parse_uint(cells[2], row, columns[2]));
    r.y_true = static_cast<ClassId>(parse_uint(cells[3], row, columns[3]));
    r.error = parse_flag(cells[4], row, columns[4]) ? 1 : 0;
    r.alarm = parse_flag(cells[5], row, columns[5]);
    r.requested = parse_flag(cells[6], row, columns[6]);
    r.labeled = parse_flag(cells[7], row, columns[7]);
    r.labels_used = parse_uint(cells[8], row, columns[8]);
    if (!log.records.empty() && r.index <= log.records.back().index) {
      throw ParseError("row " + std::to_string(row) + ": indices must increase", row);
    }
    log.records.push_back(r);
  }
  return log;
}

DriftMatch match_drifts(std::span<const StreamIndex> detected, std::span<const StreamIndex> ground_truth,
                        std::size_t horizon) {
  DriftMatch m;
  std::vector<bool> used(ground_truth.size(), false);
  for (StreamIndex d : detected) {
    bool matched = false;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (used[g]) continue;
      const StreamIndex gt = ground_truth[g];
      if (gt <= d && d - gt <= horizon) {
        used[g] = true;
        m.pairs.emplace_back(gt, d);
        matched = true;
        break;
      }
    }
    if (matched) {
      ++m.tp;
    } else {
      ++m.fp;
    }
  }
  m.fn = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return m;
}

Metrics compute_metrics(const RunLog& log, std::span<const StreamIndex> ground_truth, std::size_t horizon) {
  Metrics m;
  m.test_length = log.records.size();
  std::size_t correct = 0;
  for (const auto& r : log.records) {
    if (r.y_online == r.y_true) ++correct;
  }
  const auto detected = log.alarm_indices();
  const auto match = match_drifts(detected, ground_truth, horizon);
  m.tp = match.tp;
  m.fp = match.fp;
  m.fn = match.fn;
  m.pairs = match.pairs;
  m.alarms = detected.size();
  m.labels_used = log.records.empty() ? 0 : log.records.back().labels_used;
  if (m.test_length > 0) {
    const auto n = static_cast<double>(m.test_length);
    m.macc = 100.0 * static_cast<double>(correct) / n;
    m.lbl = 100.0 * static_cast<double>(m.labels_used) / n;
  }
  if (m.tp + m.fp > 0) m.precision = 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = 100.0 * static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  return m;
}

Metrics aggregate(std::span<const Metrics> per_seed) {
  Metrics out;
  if (per_seed.empty()) return out;
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  std::size_t precision_n = 0;
  std::size_t recall_n = 0;
  for (const auto& m : per_seed) {
    out.macc += m.macc;
    out.lbl += m.lbl;
    out.tp += m.tp;
    out.fp += m.fp;
    out.fn += m.fn;
    out.alarms += m.alarms;
    out.labels_used += m.labels_used;
    out.test_length += m.test_length;
    if (m.precision) {
      precision_sum += *m.precision;
      ++precision_n;
    }
    if (m.recall) {
      recall_sum += *m.recall;
      ++recall_n;
    }
  }
  const auto n = static_cast<double>(per_seed.size());
  out.macc /= n;
  out.lbl /= n;
  if (precision_n > 0) out.precision = precision_sum / static_cast<double>(precision_n);
  if (recall_n > 0) out.recall = recall_sum / static_cast<double>(recall_n);
  return out;
}

void ExperimentConfig::validate() const {
  std::ostringstream problems;
  if (train_size == 0) problems << "train_size must be positive\n";
  if (retrain_size == 0) problems << "retrain_size must be positive\n";
  if (horizon == 0) problems << "horizon must be positive\n";
  if (online_training.n_trees == 0) problems << "online n_trees must be at least 1\n";
  if (online_training.min_samples_split < 2) problems << "online min_samples_split must be at least 2\n";
  if (!(supervised_detector.lambda > 0.0)) problems << "supervised detector lambda must be > 0\n";
  if (!(supervised_detector.alpha > 0.0 && supervised_detector.alpha <= 1.0)) {
    problems << "supervised detector alpha must lie in (0, 1]\n";
  }
  if (!(supervised_detector.delta >= 0.0)) problems << "supervised detector delta must be >= 0\n";
  std::string text = problems.str();
  if (mode == Mode::cdseer) {
    try {
      seer.validate();
    } catch (const ConfigError& e) {
      text += e.what();
    }
    if (oracle.policy == OraclePolicy::fraction && !(oracle.fraction >= 0.0 && oracle.fraction <= 1.0)) {
      text += "oracle fraction must lie in [0, 1]\n";
    }
  }
  if (!text.empty()) throw ConfigError(text);
}

namespace {

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ClassId truth_of(const DataPoint& p) {
  auto label = GroundTruth::label(p);
  if (!label) throw InvalidArgument("evaluation stream point " + std::to_string(p.index()) + " has no label");
  return *label;
}

std::vector<LabeledPoint> labeled_range(std::span<const DataPoint> points) {
  std::vector<LabeledPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p, truth_of(p)});
  return out;
}

RunLog run_supervised(std::span<const DataPoint> stream, const ExperimentConfig& cfg, std::uint64_t seed,
                      bool retrain) {
  const auto training = labeled_range(stream.first(cfg.train_size));
  TrainConfig tc = cfg.online_training;
  tc.seed = mix(seed ^ 0x6f6e6c696e65ULL);
  auto online = train(training, tc);
  PageHinkley detector(cfg.supervised_detector);

  RunLog log;
  log.seed = seed;
  std::size_t retrains = 0;
  for (std::size_t i = cfg.train_size; i < stream.size(); ++i) {
    const auto& x = stream[i];
    RunRecord r;
    r.index = x.index();
    r.y_online = online.predict(x.features());
    r.y_true = truth_of(x);
    r.error = disagreement(r.y_online, r.y_true);
    r.labels_used = i - cfg.train_size + 1;
    if (cfg.mode != Mode::none) {
      r.alarm = detector.update(static_cast<double>(r.error), x.index()).has_value();
      if (r.alarm && retrain) {
        const std::size_t begin = i + 1 >= cfg.retrain_size ? i + 1 - cfg.retrain_size : 0;
        TrainConfig rc = cfg.online_training;
        rc.seed = mix(seed ^ mix(++retrains));
        online = train(labeled_range(stream.subspan(begin, i + 1 - begin)), rc);
      }
    } else {
      r.labels_used = 0;
    }
    log.records.push_back(r);
  }
  return log;
}

RunLog run_cdseer(std::span<const DataPoint> stream, const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto training = labeled_range(stream.first(cfg.train_size));
  OracleConfig oc = cfg.oracle;
  oc.budget_fraction = cfg.seer.label_budget;
  oc.stream_length = stream.size() - cfg.train_size;
  oc.seed = mix(seed ^ 0x6f7261636c65ULL);
  LabelOracle oracle(oc);

  SeerConfig sc = cfg.seer;
  sc.seed = seed;
  sc.online_training = cfg.online_training;
  auto labeler = [&oracle](const std::vector<DataPoint>& pts) { return oracle.label_all(pts); };
  Seer seer = make_seer(training, sc, labeler);

  RunLog log;
  log.seed = seed;
  for (std::size_t i = cfg.train_size; i < stream.size(); ++i) {
    const auto& x = stream[i];
    const auto outcome = seer.step(x);
    RunRecord r;
    r.index = x.index();
    r.y_online = outcome.y_online;
    r.y_inspector = outcome.y_inspector;
    r.y_true = truth_of(x);
    r.error = outcome.error;
    r.alarm = outcome.alarm.has_value();
    if (outcome.request) {
      r.requested = true;
      const auto answer = oracle.answer(*outcome.request);
      const auto before = seer.labels_ingested();
      seer.ingest_labels(answer);
      r.labeled = seer.labels_ingested() > before;
    }
    r.labels_used = seer.labels_ingested();
    log.records.push_back(r);
  }
  return log;
}

std::vector<StreamIndex> scheduled_drifts(const StreamSpec& spec, std::size_t train_size, std::size_t length) {
  std::vector<StreamIndex> out;
  for (StreamIndex d : spec.schedule.drift_indices()) {
    if (d >= train_size && d < length) out.push_back(d);
  }
  return out;
}

}  // namespace

SeedRun run_seed(const StreamSpec& stream_spec, const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  StreamSpec spec = stream_spec;
  spec.seed = seed;
  const auto stream = make_stream(spec);
  if (stream.size() <= cfg.train_size) {
    throw InvalidArgument("stream of " + std::to_string(stream.size()) +
                          " points is not longer than the training prefix of " +
                          std::to_string(cfg.train_size));
  }

  SeedRun run;
  run.seed = seed;
  switch (cfg.mode) {
    case Mode::none:
      run.log = run_supervised(stream, cfg, seed, false);
      break;
    case Mode::supervised_pht:
      run.log = run_supervised(stream, cfg, seed, true);
      break;
    case Mode::pht_no_retrain_gt:
      run.log = run_supervised(stream, cfg, seed, false);
      break;
    case Mode::cdseer:
      run.log = run_cdseer(stream, cfg, seed);
      break;
  }

  if (spec.generator != Generator::csv || !spec.schedule.changes.empty()) {
    run.ground_truth = scheduled_drifts(spec, cfg.train_size, stream.size());
  } else {
    ExperimentConfig gt_cfg = cfg;
    gt_cfg.mode = Mode::pht_no_retrain_gt;
    run.ground_truth = run_supervised(stream, gt_cfg, seed, false).alarm_indices();
  }
  run.metrics = compute_metrics(run.log, run.ground_truth, cfg.horizon);
  return run;
}

Report run_experiment(const StreamSpec& stream, const ExperimentConfig& cfg,
                      std::span<const std::uint64_t> seeds, std::string name) {
  if (seeds.empty()) throw InvalidArgument("run_experiment needs at least one seed");
  cfg.validate();

  Report report;
  report.name = std::move(name);
  report.stream = stream;
  report.config = cfg;
  report.runs.resize(seeds.size());

  const std::size_t workers =
      cfg.parallel ? std::max<std::size_t>(1, std::min<std::size_t>(seeds.size(), std::thread::hardware_concurrency()))
                   : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) report.runs[i] = run_seed(stream, cfg, seeds[i]);
  } else {
    std::vector<std::future<void>> jobs;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
          report.runs[i] = run_seed(stream, cfg, seeds[i]);
        }
      }));
    }
    for (auto& j : jobs) j.get();
  }

  std::vector<Metrics> per_seed;
  for (const auto& r : report.runs) per_seed.push_back(r.metrics);
  report.aggregate = aggregate(per_seed);
  return report;
}

std::vector<GridCell> sensitivity_grid() { return {{500, 10}, {500, 15}, {1000, 10}, {1000, 15}}; }

std::vector<Report> run_sensitivity_grid(const StreamSpec& stream, const ExperimentConfig& base,
                                         std::span<const std::uint64_t> seeds,
                                         std::span<const GridCell> cells) {
  std::vector<Report> out;
  for (const auto& cell : cells) {
    ExperimentConfig cfg = base;
    cfg.mode = Mode::cdseer;
    cfg.seer.window_size = cell.window_size;
    cfg.seer.memory_capacity = cell.memory_capacity;
    out.push_back(run_experiment(stream, cfg, seeds,
                                 std::string(to_string(stream.generator)) + "-w" +
                                     std::to_string(cell.window_size) + "-m" +
                                     std::to_string(cell.memory_capacity)));
  }
  return out;
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
  auto optional = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [g, d] : m.pairs) pairs.push_back({g, d});
  return {{"macc", m.macc},
          {"precision", optional(m.precision)},
          {"recall", optional(m.recall)},
          {"lbl", m.lbl},
          {"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn},
          {"alarms", m.alarms},
          {"labels_used", m.labels_used},
          {"test_length", m.test_length},
          {"matched", std::move(pairs)}};
}

nlohmann::json forest_json(const TrainConfig& t) {
  return {{"trees", t.n_trees},
          {"max_depth", t.max_depth},
          {"min_samples_split", t.min_samples_split},
          {"features_per_split", t.features_per_split},
          {"bootstrap", t.bootstrap}};
}

nlohmann::json pht_json(const PageHinkleyParams& p) {
  return {{"delta", p.delta}, {"lambda", p.lambda}, {"alpha", p.alpha}};
}

nlohmann::json config_json(const StreamSpec& s, const ExperimentConfig& c) {
  nlohmann::json drifts = nlohmann::json::array();
  for (const auto& ch : s.schedule.changes) drifts.push_back({{"index", ch.start}, {"concept", ch.concept_id}});
  nlohmann::json stream{{"dataset", to_string(s.generator)},
                        {"length", s.length},
                        {"drifts", std::move(drifts)},
                        {"label_noise", s.label_noise}};
  if (s.generator == Generator::csv) stream["csv_path"] = s.csv_path;

  const char* policy = c.oracle.policy == OraclePolicy::all        ? "all"
                       : c.oracle.policy == OraclePolicy::fraction ? "fraction"
                                                                   : "budget";
  return {{"stream", std::move(stream)},
          {"experiment",
           {{"mode", to_string(c.mode)},
            {"train_size", c.train_size},
            {"retrain_size", c.retrain_size},
            {"horizon", c.horizon}}},
          {"forest", forest_json(c.online_training)},
          {"supervised_detector", pht_json(c.supervised_detector)},
          {"seer",
           {{"window", c.seer.window_size},
            {"memory", c.seer.memory_capacity},
            {"sampling_period", c.seer.effective_sampling_period()},
            {"per_stratum", c.seer.per_stratum},
            {"budget", c.seer.label_budget},
            {"retrain_online", c.seer.retrain_online_on_alarm},
            {"reestimate_epsilon", c.seer.reestimate_epsilon},
            {"detector", to_string(c.seer.detector.kind)},
            {"pht", pht_json(c.seer.detector.page_hinkley)},
            {"ddm_warmup", c.seer.detector.ddm.warmup},
            {"inspector_forest", forest_json(c.seer.inspector_training)},
            {"spread",
             {{"graph", c.seer.spread.graph == GraphKind::knn ? "knn" : "complete"},
              {"k", c.seer.spread.k},
              {"alpha", c.seer.spread.alpha},
              {"max_iterations", c.seer.spread.max_iterations},
              {"tolerance", c.seer.spread.tolerance}}}}},
          {"oracle", {{"policy", policy}, {"fraction", c.oracle.fraction}}}};
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << *v;
  return s.str();
}

}  // namespace

std::string Report::to_json(std::string_view generated_at) const {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : runs) {
    seeds.push_back({{"seed", r.seed},
                     {"metrics", metrics_json(r.metrics)},
                     {"alarms", r.log.alarm_indices()},
                     {"ground_truth", r.ground_truth}});
  }
  nlohmann::json doc{{"name", name},
                     {"generated_at", std::string(generated_at)},
                     {"config", config_json(stream, config)},
                     {"seeds", std::move(seeds)},
                     {"aggregate", metrics_json(aggregate)}};
  return doc.dump(2);
}

std::string Report::summary_csv_header() {
  return "name,dataset,mode,window,memory,seeds,macc,precision,recall,lbl,tp,fp,fn";
}

std::string Report::summary_csv_row() const {
  std::ostringstream s;
  s << name << ',' << to_string(stream.generator) << ',' << to_string(config.mode) << ','
    << config.seer.window_size << ',' << config.seer.memory_capacity << ',' << runs.size() << ','
    << percent(aggregate.macc) << ',' << percent(aggregate.precision) << ',' << percent(aggregate.recall)
    << ',' << percent(aggregate.lbl) << ',' << aggregate.tp << ',' << aggregate.fp << ',' << aggregate.fn;
  return s.str();
}

}  // namespace seer
