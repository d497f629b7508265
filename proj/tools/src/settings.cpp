#include "settings.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <sstream>

#include "seer/error.hpp"

namespace seer::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(std::size_t v) { return std::to_string(v); }

void put_forest(std::map<std::string, std::string>& out, const std::string& prefix, const TrainConfig& t) {
  out[prefix + "kind"] = t.kind == ModelKind::decision_tree ? "decision_tree" : "random_forest";
  out[prefix + "trees"] = fmt(t.n_trees);
  out[prefix + "max_depth"] = fmt(t.max_depth);
  out[prefix + "min_samples_split"] = fmt(t.min_samples_split);
  out[prefix + "features_per_split"] = fmt(t.features_per_split);
  out[prefix + "bootstrap"] = fmt(t.bootstrap);
}

// Parsing helpers record a message and leave the target untouched on failure.
class Reader {
 public:
  Reader(const std::map<std::string, std::string>& values, std::vector<std::string>& errors)
      : values_(values), errors_(errors) {}

  const std::string& text(const std::string& key) const { return values_.at(key); }

  void size(const std::string& key, std::size_t& out) {
    const auto& s = text(key);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      fail(key, "a non-negative integer");
    } else {
      out = v;
    }
  }

  void real(const std::string& key, double& out) {
    const auto& s = text(key);
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      fail(key, "a number");
    } else {
      out = v;
    }
  }

  void flag(const std::string& key, bool& out) {
    const auto& s = text(key);
    if (s == "true" || s == "1" || s == "yes") {
      out = true;
    } else if (s == "false" || s == "0" || s == "no") {
      out = false;
    } else {
      fail(key, "true or false");
    }
  }

  void forest(const std::string& prefix, TrainConfig& t) {
    const auto& kind = text(prefix + "kind");
    if (kind == "random_forest") {
      t.kind = ModelKind::random_forest;
    } else if (kind == "decision_tree") {
      t.kind = ModelKind::decision_tree;
    } else {
      fail(prefix + "kind", "random_forest or decision_tree");
    }
    size(prefix + "trees", t.n_trees);
    size(prefix + "max_depth", t.max_depth);
    size(prefix + "min_samples_split", t.min_samples_split);
    size(prefix + "features_per_split", t.features_per_split);
    flag(prefix + "bootstrap", t.bootstrap);
  }

  void fail(const std::string& key, const std::string& expected) {
    errors_.push_back(key + ": expected " + expected + ", got '" + text(key) + "'");
  }

  void error(std::string message) { errors_.push_back(std::move(message)); }

 private:
  const std::map<std::string, std::string>& values_;
  std::vector<std::string>& errors_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

Settings Settings::defaults() {
  const ExperimentConfig e;
  const StreamSpec s;
  Settings out;
  auto& v = out.values_;
  v["run.name"] = "";
  v["run.mode"] = std::string(to_string(e.mode));
  v["run.seeds"] = "1,2,3,4,5";
  v["run.grid"] = "none";
  v["run.output_dir"] = "";
  v["run.parallel"] = fmt(e.parallel);
  v["run.write_logs"] = "true";

  v["eval.train_size"] = fmt(e.train_size);
  v["eval.retrain_size"] = fmt(e.retrain_size);
  v["eval.horizon"] = fmt(e.horizon);

  v["stream.dataset"] = std::string(to_string(s.generator));
  v["stream.length"] = fmt(s.length);
  v["stream.drifts"] = "standard";
  v["stream.label_noise"] = fmt(s.label_noise);
  v["stream.csv_path"] = "";
  v["stream.label_column"] = s.csv_schema.label_column;
  v["stream.features"] = "";
  v["stream.header"] = fmt(s.csv_schema.header);

  put_forest(v, "forest.", e.online_training);

  v["supervised.delta"] = fmt(e.supervised_detector.delta);
  v["supervised.lambda"] = fmt(e.supervised_detector.lambda);
  v["supervised.alpha"] = fmt(e.supervised_detector.alpha);

  const auto& c = e.seer;
  v["seer.window"] = fmt(c.window_size);
  v["seer.memory"] = fmt(c.memory_capacity);
  v["seer.sampling_period"] = fmt(c.sampling_period);
  v["seer.per_stratum"] = fmt(c.per_stratum);
  v["seer.budget"] = fmt(c.label_budget);
  v["seer.retrain_online"] = fmt(c.retrain_online_on_alarm);
  v["seer.reestimate_epsilon"] = fmt(c.reestimate_epsilon);
  v["seer.detector.kind"] = std::string(to_string(c.detector.kind));
  v["seer.detector.delta"] = fmt(c.detector.page_hinkley.delta);
  v["seer.detector.lambda"] = fmt(c.detector.page_hinkley.lambda);
  v["seer.detector.alpha"] = fmt(c.detector.page_hinkley.alpha);
  v["seer.detector.ddm_warmup"] = fmt(c.detector.ddm.warmup);
  v["seer.detector.ddm_warning"] = fmt(c.detector.ddm.warning_level);
  v["seer.detector.ddm_alarm"] = fmt(c.detector.ddm.alarm_level);
  put_forest(v, "seer.inspector.", c.inspector_training);
  v["seer.spread.graph"] = c.spread.graph == GraphKind::knn ? "knn" : "complete";
  v["seer.spread.k"] = fmt(c.spread.k);
  v["seer.spread.alpha"] = fmt(c.spread.alpha);
  v["seer.spread.max_iterations"] = fmt(c.spread.max_iterations);
  v["seer.spread.tolerance"] = fmt(c.spread.tolerance);

  v["oracle.policy"] = "budget";
  v["oracle.fraction"] = fmt(e.oracle.fraction);
  return out;
}

std::vector<std::string> Settings::preset_names() {
  std::vector<std::string> out;
  for (const char* d : {"sine", "sea"}) {
    for (const char* m : {"none", "pht", "cdseer"}) out.push_back(std::string("table2-") + d + "-" + m);
  }
  out.push_back("table3-grid");
  out.push_back("table3-grid-sea");
  return out;
}

std::optional<Settings> Settings::preset(std::string_view name) {
  Settings s = defaults();
  auto& v = s.values_;
  v["run.name"] = std::string(name);
  if (name == "table3-grid" || name == "table3-grid-sea") {
    v["run.grid"] = "table3";
    v["run.mode"] = "cdseer";
    v["stream.dataset"] = name == "table3-grid" ? "sine" : "sea";
    return s;
  }
  for (const char* d : {"sine", "sea"}) {
    for (auto [suffix, mode] : {std::pair{"none", "none"}, std::pair{"pht", "supervised_pht"},
                                std::pair{"cdseer", "cdseer"}}) {
      if (name == std::string("table2-") + d + "-" + suffix) {
        v["stream.dataset"] = d;
        v["run.mode"] = mode;
        return s;
      }
    }
  }
  return std::nullopt;
}

void Settings::merge_ini(std::istream& in, const std::string& source, std::vector<std::string>& errors) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    errors.push_back(source + ":" + std::to_string(e.line()) + ": " + e.message());
    return;
  }
  auto assign = [&](const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) {
      errors.push_back(source + ": unknown setting '" + key + "'");
    } else {
      it->second = value;
    }
  };
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      assign(section, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) assign(section + "." + key, leaf.data());
  }
}

void Settings::set(std::string_view assignment, std::vector<std::string>& errors) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    errors.push_back("override '" + std::string(assignment) + "' is not key=value");
    return;
  }
  const std::string key(assignment.substr(0, eq));
  auto it = values_.find(key);
  if (it == values_.end()) {
    errors.push_back("unknown setting '" + key + "'");
    return;
  }
  it->second = std::string(assignment.substr(eq + 1));
}

std::string Settings::to_ini() const {
  // Keys are sorted, so each section's keys are contiguous once split at the last dot.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [key, value] : values_) {
    const auto dot = key.rfind('.');
    sections[key.substr(0, dot)].emplace_back(key.substr(dot + 1), value);
  }
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, entries] : sections) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
  }
  return out.str();
}

RunPlan resolve(const Settings& settings, std::string_view default_output_dir) {
  std::vector<std::string> errors;
  const auto& values = settings.values();
  Reader r(values, errors);
  RunPlan plan;
  auto& e = plan.experiment;
  auto& s = plan.stream;

  if (auto mode = parse_mode(r.text("run.mode"))) {
    e.mode = *mode;
  } else {
    r.fail("run.mode", "one of none, supervised_pht, cdseer, pht_no_retrain_gt");
  }
  for (const auto& item : split_list(r.text("run.seeds"))) {
    std::uint64_t seed = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), seed);
    if (ec != std::errc() || p != item.data() + item.size()) {
      r.error("run.seeds: '" + item + "' is not a non-negative integer");
    } else {
      plan.seeds.push_back(seed);
    }
  }
  if (plan.seeds.empty()) r.error("run.seeds: at least one seed is required");
  const auto& grid = r.text("run.grid");
  if (grid == "table3") {
    plan.grid = true;
  } else if (grid != "none") {
    r.fail("run.grid", "none or table3");
  }
  r.flag("run.parallel", e.parallel);
  r.flag("run.write_logs", plan.write_logs);

  r.size("eval.train_size", e.train_size);
  r.size("eval.retrain_size", e.retrain_size);
  r.size("eval.horizon", e.horizon);

  if (auto g = parse_generator(r.text("stream.dataset"))) {
    s.generator = *g;
  } else {
    r.fail("stream.dataset", "sine, sea or csv");
  }
  r.size("stream.length", s.length);
  r.real("stream.label_noise", s.label_noise);
  s.csv_path = r.text("stream.csv_path");
  s.csv_schema.label_column = r.text("stream.label_column");
  s.csv_schema.feature_columns = split_list(r.text("stream.features"));
  r.flag("stream.header", s.csv_schema.header);
  if (s.generator == Generator::csv && s.csv_path.empty()) r.error("stream.csv_path: required for the csv dataset");

  const auto& drifts = r.text("stream.drifts");
  if (drifts == "standard") {
    s.schedule = s.generator == Generator::csv ? DriftSchedule{} : DriftSchedule::standard();
  } else if (drifts == "none" || drifts.empty()) {
    s.schedule = {};
  } else {
    s.schedule = {};
    for (const auto& item : split_list(drifts)) {
      const auto colon = item.find(':');
      DriftSchedule::Change c;
      c.concept_id = static_cast<int>(s.schedule.changes.size()) + 1;
      const std::string idx = item.substr(0, colon);
      auto [p, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), c.start);
      bool ok = ec == std::errc() && p == idx.data() + idx.size();
      if (ok && colon != std::string::npos) {
        const std::string cid = item.substr(colon + 1);
        auto [q, ec2] = std::from_chars(cid.data(), cid.data() + cid.size(), c.concept_id);
        ok = ec2 == std::errc() && q == cid.data() + cid.size();
      }
      if (!ok) {
        r.error("stream.drifts: '" + item + "' is not index or index:concept");
      } else {
        s.schedule.changes.push_back(c);
      }
    }
    if (s.generator != Generator::csv) {
      try {
        s.schedule.validate(3);
      } catch (const InvalidArgument& ex) {
        r.error(std::string("stream.drifts: ") + ex.what());
      }
    }
  }
  if (!(s.label_noise >= 0.0 && s.label_noise <= 1.0)) r.error("stream.label_noise: must lie in [0, 1]");
  if (s.generator != Generator::csv && s.length == 0) r.error("stream.length: must be positive");
  if (s.generator != Generator::csv && s.length <= e.train_size) {
    r.error("stream.length: must exceed eval.train_size");
  }

  r.forest("forest.", e.online_training);
  r.real("supervised.delta", e.supervised_detector.delta);
  r.real("supervised.lambda", e.supervised_detector.lambda);
  r.real("supervised.alpha", e.supervised_detector.alpha);

  auto& c = e.seer;
  r.size("seer.window", c.window_size);
  r.size("seer.memory", c.memory_capacity);
  r.size("seer.sampling_period", c.sampling_period);
  r.size("seer.per_stratum", c.per_stratum);
  r.real("seer.budget", c.label_budget);
  r.flag("seer.retrain_online", c.retrain_online_on_alarm);
  r.flag("seer.reestimate_epsilon", c.reestimate_epsilon);
  if (auto kind = parse_detector_kind(r.text("seer.detector.kind"))) {
    c.detector.kind = *kind;
  } else {
    r.fail("seer.detector.kind", "pht or ddm");
  }
  r.real("seer.detector.delta", c.detector.page_hinkley.delta);
  r.real("seer.detector.lambda", c.detector.page_hinkley.lambda);
  r.real("seer.detector.alpha", c.detector.page_hinkley.alpha);
  r.size("seer.detector.ddm_warmup", c.detector.ddm.warmup);
  r.real("seer.detector.ddm_warning", c.detector.ddm.warning_level);
  r.real("seer.detector.ddm_alarm", c.detector.ddm.alarm_level);
  if (!(c.detector.ddm.warning_level > 0.0 && c.detector.ddm.alarm_level >= c.detector.ddm.warning_level)) {
    r.error("seer.detector: ddm levels must satisfy 0 < ddm_warning <= ddm_alarm");
  }
  r.forest("seer.inspector.", c.inspector_training);
  c.online_training = e.online_training;
  const auto& graph = r.text("seer.spread.graph");
  if (graph == "knn") {
    c.spread.graph = GraphKind::knn;
  } else if (graph == "complete") {
    c.spread.graph = GraphKind::complete;
  } else {
    r.fail("seer.spread.graph", "knn or complete");
  }
  r.size("seer.spread.k", c.spread.k);
  r.real("seer.spread.alpha", c.spread.alpha);
  r.size("seer.spread.max_iterations", c.spread.max_iterations);
  r.real("seer.spread.tolerance", c.spread.tolerance);

  const auto& policy = r.text("oracle.policy");
  if (policy == "budget") {
    e.oracle.policy = OraclePolicy::budget_capped;
  } else if (policy == "all") {
    e.oracle.policy = OraclePolicy::all;
  } else if (policy == "fraction") {
    e.oracle.policy = OraclePolicy::fraction;
  } else {
    r.fail("oracle.policy", "budget, all or fraction");
  }
  r.real("oracle.fraction", e.oracle.fraction);

  // Semantic checks on the assembled structures. In grid mode the window and memory
  // come from the grid, so those fields are not checked here.
  try {
    ExperimentConfig check = e;
    check.mode = Mode::cdseer;
    check.validate();
  } catch (const ConfigError& ex) {
    std::istringstream lines(ex.what());
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty()) errors.push_back(line);
    }
  }

  plan.name = r.text("run.name");
  if (plan.name.empty()) {
    plan.name = std::string(to_string(s.generator)) + "-" + std::string(to_string(e.mode));
  }
  if (plan.name.find('/') != std::string::npos || plan.name == "." || plan.name == "..") {
    r.error("run.name: must be a plain file name");
  }
  plan.output_dir = r.text("run.output_dir");
  if (plan.output_dir.empty()) plan.output_dir = std::string(default_output_dir);

  if (!errors.empty()) {
    std::string all;
    for (const auto& m : errors) all += m + "\n";
    throw ConfigError(all);
  }
  return plan;
}

}  // namespace seer::cli
