#include "commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "seer/datasets.hpp"
#include "seer/error.hpp"
#include "seer/evaluation.hpp"
#include "settings.hpp"

namespace seer::cli {

namespace fs = std::filesystem;

namespace {

/// Problems that should exit with the usage code rather than a runtime failure.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// --- generate -----------------------------------------------------------------

struct GenerateArgs {
  std::string dataset;
  std::size_t n = 16000;
  std::uint64_t seed = 1;
  std::string output;
  std::string drifts = "standard";
  double label_noise = 0.0;
};

DriftSchedule parse_drifts(const std::string& text, std::size_t n) {
  DriftSchedule schedule;
  if (text == "standard") {
    schedule = DriftSchedule::standard();
  } else if (text != "none") {
    auto settings = Settings::defaults();
    std::vector<std::string> problems;
    settings.set("stream.drifts=" + text, problems);
    try {
      schedule = resolve(settings, ".").stream.schedule;
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--drifts: ") + e.what());
    }
  }
  // Changes past the end of a short stream never happen.
  std::erase_if(schedule.changes, [&](const DriftSchedule::Change& c) { return c.start >= n; });
  return schedule;
}

int generate(const GenerateArgs& a, std::ostream& out) {
  StreamSpec spec;
  spec.generator = *parse_generator(a.dataset);
  spec.length = a.n;
  spec.seed = a.seed;
  spec.label_noise = a.label_noise;
  spec.schedule = parse_drifts(a.drifts, a.n);
  const auto points = make_stream(spec);

  std::ostringstream csv;
  write_csv(csv, points, spec.schedule);

  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : spec.schedule.changes) changes.push_back({{"index", c.start}, {"concept", c.concept_id}});
  const nlohmann::json sidecar{{"dataset", a.dataset},
                               {"n", a.n},
                               {"seed", a.seed},
                               {"label_noise", a.label_noise},
                               {"changes", changes},
                               {"drift_indices", spec.schedule.drift_indices()}};

  const fs::path path(a.output);
  fs::path side = path;
  side.replace_filename(path.stem().string() + ".schedule.json");
  try {
    write_atomic(path, csv.str());
    write_atomic(side, sidecar.dump(2) + "\n");
  } catch (const fs::filesystem_error& e) {
    throw UsageError(std::string("cannot write output: ") + e.what());
  } catch (const std::ios_base::failure& e) {
    throw UsageError(std::string("cannot write output: ") + e.what());
  }
  out << "wrote " << points.size() << " rows to " << path.string() << " and schedule to " << side.string()
      << '\n';
  return ok;
}

// --- run ----------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  bool print_defaults = false;
};

std::string seeds_text(const RunPlan& plan) {
  std::string s;
  for (auto seed : plan.seeds) s += (s.empty() ? "" : ",") + std::to_string(seed);
  return s;
}

void write_report(const fs::path& dir, const Report& report, bool logs, const std::string& stamp) {
  write_atomic(dir / "report.json", report.to_json(stamp) + "\n");
  write_atomic(dir / "summary.csv", Report::summary_csv_header() + "\n" + report.summary_csv_row() + "\n");
  if (!logs) return;
  for (const auto& r : report.runs) {
    std::ostringstream log;
    write_run_log(log, r.log);
    write_atomic(dir / "logs" / ("seed-" + std::to_string(r.seed) + ".csv"), log.str());
  }
}

// Every problem from every layer is reported in one go: unknown keys from the file and
// the overrides, then whatever the merged values fail to satisfy.
RunPlan plan_for(const RunArgs& a) {
  std::vector<std::string> problems;
  Settings settings = Settings::defaults();
  if (!a.preset.empty()) {
    auto p = Settings::preset(a.preset);
    if (!p) {
      std::string names;
      for (const auto& n : Settings::preset_names()) names += " " + n;
      throw ConfigError("unknown preset '" + a.preset + "'; available:" + names + "\n");
    }
    settings = *p;
  }
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("cannot open config file '" + a.config + "'\n");
    settings.merge_ini(in, a.config, problems);
  }
  for (const auto& o : a.overrides) settings.set(o, problems);
  try {
    auto plan = resolve(settings, default_output_dir());
    if (problems.empty()) return plan;
  } catch (const ConfigError& e) {
    std::istringstream lines(e.what());
    std::string line;
    while (std::getline(lines, line)) problems.push_back(line);
  }
  std::string all;
  for (const auto& p : problems) all += p + "\n";
  throw ConfigError(all);
}

int run(const RunArgs& a, std::ostream& out) {
  if (a.print_defaults) {
    out << Settings::defaults().to_ini();
    return ok;
  }
  const auto plan = plan_for(a);
  const fs::path root = fs::path(plan.output_dir) / plan.name;
  const auto stamp = utc_now();

  std::vector<Report> reports;
  if (plan.grid) {
    reports = run_sensitivity_grid(plan.stream, plan.experiment, plan.seeds, sensitivity_grid());
    std::string summary = Report::summary_csv_header() + "\n";
    for (const auto& r : reports) {
      write_report(root / r.name, r, plan.write_logs, stamp);
      summary += r.summary_csv_row() + "\n";
    }
    write_atomic(root / "summary.csv", summary);
  } else {
    reports.push_back(run_experiment(plan.stream, plan.experiment, plan.seeds, plan.name));
    write_report(root, reports.front(), plan.write_logs, stamp);
  }

  out << "seeds " << seeds_text(plan) << "; results in " << root.string() << '\n';
  out << Report::summary_csv_header() << '\n';
  for (const auto& r : reports) out << r.summary_csv_row() << '\n';
  return ok;
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string log;
  std::string gt;
  std::size_t horizon = 2000;
};

std::vector<StreamIndex> read_ground_truth(const std::string& path) {
  const auto text = slurp(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<StreamIndex> out;
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
      const auto& list = doc.is_object() ? doc.at("drift_indices") : doc;
      out = list.get<std::vector<StreamIndex>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("ground truth '" + path + "': " + e.what(), 0);
    }
  } else {
    std::string token;
    std::size_t row = 1;
    std::string cleaned = text;
    for (char& c : cleaned) {
      if (c == ',') c = ' ';
    }
    std::istringstream lines(cleaned);
    std::string line;
    while (std::getline(lines, line)) {
      std::istringstream cells(line);
      while (cells >> token) {
        StreamIndex v = 0;
        auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || p != token.data() + token.size()) {
          throw ParseError("ground truth '" + path + "' row " + std::to_string(row) + ": '" + token +
                               "' is not a stream index",
                           row);
        }
        out.push_back(v);
      }
      ++row;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int eval(const EvalArgs& a, std::ostream& out) {
  if (a.horizon == 0) throw UsageError("--horizon must be positive");
  std::ifstream in(a.log);
  if (!in) throw UsageError("cannot open log '" + a.log + "'");
  const auto log = read_run_log(in);
  auto gt = read_ground_truth(a.gt);
  if (!log.records.empty()) {
    const auto lo = log.records.front().index;
    const auto hi = log.records.back().index;
    std::erase_if(gt, [&](StreamIndex g) { return g < lo || g > hi; });
  }
  const auto m = compute_metrics(log, gt, a.horizon);
  auto optional = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [g, d] : m.pairs) pairs.push_back({g, d});
  const nlohmann::json doc{{"horizon", a.horizon},
                           {"macc", m.macc},
                           {"precision", optional(m.precision)},
                           {"recall", optional(m.recall)},
                           {"lbl", m.lbl},
                           {"tp", m.tp},
                           {"fp", m.fp},
                           {"fn", m.fn},
                           {"alarms", m.alarms},
                           {"labels_used", m.labels_used},
                           {"test_length", m.test_length},
                           {"ground_truth", gt},
                           {"matched", pairs}};
  out << doc.dump(2) << '\n';
  return ok;
}

}  // namespace

std::string default_output_dir() {
  const char* env = std::getenv("SEER_OUTPUT_DIR");
  return env && *env ? env : "runs";
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(rd());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw fs::filesystem_error("cannot open for writing", tmp, std::make_error_code(std::errc::io_error));
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      f.close();
      fs::remove(tmp);
      throw fs::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
    }
  }
  fs::rename(tmp, path);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-drift detection with clustering-guided label requests"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic stream as CSV plus a schedule sidecar");
  g->add_option("--dataset", gen.dataset, "sine or sea")->required()->check(CLI::IsMember({"sine", "sea"}));
  g->add_option("--n", gen.n, "number of points")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--drifts", gen.drifts, "standard, none or index:concept,...")->capture_default_str();
  g->add_option("--label-noise", gen.label_noise, "probability of flipping a label")->check(CLI::Range(0.0, 1.0));
  g->add_option("-o,--output", gen.output, "CSV path")->required();

  RunArgs runa;
  auto* r = app.add_subcommand("run", "Run an experiment from a config file or preset");
  r->add_option("--config", runa.config, "INI file");
  std::string preset_help = "built-in configuration:";
  for (const auto& n : Settings::preset_names()) preset_help += " " + n;
  r->add_option("--preset", runa.preset, preset_help);
  r->add_option("--set", runa.overrides, "section.key=value override, repeatable")->take_all();
  r->add_flag("--print-defaults", runa.print_defaults, "print the default configuration and exit");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a per-seed run log against ground-truth drift indices");
  e->add_option("--log", ev.log, "run log CSV")->required();
  e->add_option("--gt", ev.gt, "schedule JSON, JSON array or whitespace/comma separated indices")->required();
  e->add_option("--horizon", ev.horizon, "matching horizon in points")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (auto* s : {g, r, e}) {
      if (s->parsed()) sub = s;
    }
    err << (sub ? sub->help() : app.help());
    return usage_error;
  }

  try {
    if (g->parsed()) return generate(gen, out);
    if (r->parsed()) return run(runa, out);
    return eval(ev, out);
  } catch (const ConfigError& ex) {
    err << "configuration errors:\n" << ex.what();
    return usage_error;
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return usage_error;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return runtime_failure;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return runtime_failure;
  }
}

}  // namespace seer::cli
