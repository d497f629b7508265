#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "seer/datasets.hpp"
#include "seer/error.hpp"
#include "settings.hpp"

namespace fs = std::filesystem;
using seer::cli::Settings;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "seer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = seer::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("seer-cli-") + info->name() + "-" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

// Small streams keep the end-to-end runs fast.
const std::vector<std::string> kShort = {"--set", "stream.length=5000", "--set", "stream.drifts=3000:1",
                                         "--set", "run.seeds=1,2", "--set", "forest.trees=20",
                                         "--set", "seer.inspector.trees=20"};

std::vector<std::string> with_short(std::vector<std::string> args) {
  args.insert(args.end(), kShort.begin(), kShort.end());
  return args;
}

}  // namespace

using GenerateCommand = TempDir;

TEST_F(GenerateCommand, WritesCsvAndScheduleSidecar) {
  const auto csv = dir_ / "sub" / "sine.csv";
  const auto r = cli({"generate", "--dataset", "sine", "--n", "4000", "--seed", "9", "-o", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto loaded = seer::load_csv(csv.string(), {});
  const auto expected = seer::gen_sine(4000, seer::DriftSchedule::standard(), 9);
  ASSERT_EQ(loaded.points.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    ASSERT_TRUE(std::ranges::equal(loaded.points[i].features(), expected[i].features())) << i;
    ASSERT_EQ(*seer::GroundTruth::label(loaded.points[i]), *seer::GroundTruth::label(expected[i])) << i;
  }

  const auto side = nlohmann::json::parse(slurp(dir_ / "sub" / "sine.schedule.json"));
  EXPECT_EQ(side["drift_indices"], nlohmann::json::array({3000}));  // 10000 lies past the end
  EXPECT_EQ(side["seed"], 9);
}

TEST_F(GenerateCommand, UnknownDatasetIsAUsageError) {
  const auto r = cli({"generate", "--dataset", "electricity", "-o", (dir_ / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "x.csv"));
}

TEST_F(GenerateCommand, UnwritablePathIsAUsageError) {
  std::ofstream(dir_ / "file") << "x";
  const auto r = cli({"generate", "--dataset", "sea", "--n", "100", "-o", (dir_ / "file" / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cannot write"), std::string::npos);
}

TEST_F(GenerateCommand, LeavesNoTemporaryFiles) {
  const auto csv = dir_ / "a.csv";
  ASSERT_EQ(cli({"generate", "--dataset", "sea", "--n", "300", "-o", csv.string()}).code, 0);
  ASSERT_EQ(cli({"generate", "--dataset", "sea", "--n", "200", "-o", csv.string()}).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    ++files;
    EXPECT_EQ(e.path().string().find(".tmp-"), std::string::npos) << e.path();
  }
  EXPECT_EQ(files, 2u);
  EXPECT_EQ(seer::load_csv(csv.string(), {}).points.size(), 200u);
}

TEST(Settings, PrecedenceIsOverrideThenFileThenPresetThenDefaults) {
  auto s = *Settings::preset("table2-sea-pht");
  std::istringstream file("[seer]\nwindow = 500\nmemory = 10\n[run]\nmode = cdseer\n");
  std::vector<std::string> problems;
  s.merge_ini(file, "test.ini", problems);
  s.set("seer.window=700", problems);
  ASSERT_TRUE(problems.empty());

  const auto plan = seer::cli::resolve(s, "out");
  EXPECT_EQ(plan.experiment.seer.window_size, 700u);     // override beats file
  EXPECT_EQ(plan.experiment.seer.memory_capacity, 10u);  // file beats default
  EXPECT_EQ(plan.experiment.mode, seer::Mode::cdseer);   // file beats preset
  EXPECT_EQ(plan.stream.generator, seer::Generator::sea);  // preset beats default
  EXPECT_EQ(plan.experiment.horizon, 2000u);             // default
  EXPECT_EQ(plan.output_dir, "out");
}

TEST(Settings, DefaultsRoundTripThroughIni) {
  const auto defaults = Settings::defaults();
  Settings reread = Settings::defaults();
  std::istringstream in(defaults.to_ini());
  std::vector<std::string> problems;
  reread.merge_ini(in, "defaults", problems);
  EXPECT_TRUE(problems.empty());
  EXPECT_EQ(reread.values(), defaults.values());

  const auto plan = seer::cli::resolve(defaults, "runs");
  EXPECT_EQ(plan.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(plan.experiment.seer.window_size, 1000u);
  EXPECT_EQ(plan.experiment.seer.memory_capacity, 15u);
}

TEST(Settings, IniSyntaxErrorsNameTheFileAndLine) {
  Settings s = Settings::defaults();
  std::istringstream in("[seer]\nwindow = 500\nthis line is broken\n");
  std::vector<std::string> problems;
  s.merge_ini(in, "broken.ini", problems);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("broken.ini:3"), std::string::npos) << problems[0];
}

TEST(Settings, PresetsResolve) {
  for (const auto& name : Settings::preset_names()) {
    auto p = Settings::preset(name);
    ASSERT_TRUE(p) << name;
    EXPECT_NO_THROW(seer::cli::resolve(*p, "runs")) << name;
  }
  EXPECT_FALSE(Settings::preset("table9"));
}

using RunCommand = TempDir;

TEST_F(RunCommand, MissingConfigIsAUsageError) {
  const auto r = cli({"run", "--config", (dir_ / "absent.ini").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("absent.ini"), std::string::npos);
}

TEST_F(RunCommand, ValidationErrorsAreListedTogether) {
  std::ofstream(dir_ / "bad.ini") << "[seer]\nwindow = 0\nbogus = 1\n[stream]\ndataset = mnist\n";
  const auto r = cli({"run", "--config", (dir_ / "bad.ini").string(), "--set", "seer.spread.alpha=2",
                      "--set", "eval.horizon=soon"});
  EXPECT_EQ(r.code, 2);
  for (const char* needle : {"seer.bogus", "stream.dataset", "window_size", "spread.alpha", "eval.horizon"}) {
    EXPECT_NE(r.err.find(needle), std::string::npos) << needle << "\n" << r.err;
  }
}

TEST_F(RunCommand, PrintDefaults) {
  const auto r = cli({"run", "--print-defaults"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, Settings::defaults().to_ini());
  EXPECT_NE(r.out.find("[seer.detector]"), std::string::npos);
}

TEST_F(RunCommand, PresetWritesReportSummaryAndLogs) {
  const auto r = cli(with_short({"run", "--preset", "table2-sea-cdseer", "--set", "run.output_dir=" + dir_.string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto root = dir_ / "table2-sea-cdseer";
  const auto report = nlohmann::json::parse(slurp(root / "report.json"));
  for (const char* key : {"macc", "precision", "recall", "lbl", "tp", "fp", "fn"}) {
    EXPECT_TRUE(report["aggregate"].contains(key)) << key;
  }
  EXPECT_EQ(report["seeds"].size(), 2u);
  EXPECT_EQ(report["config"]["experiment"]["mode"], "cdseer");
  EXPECT_TRUE(fs::exists(root / "summary.csv"));
  EXPECT_TRUE(fs::exists(root / "logs" / "seed-1.csv"));
  EXPECT_TRUE(fs::exists(root / "logs" / "seed-2.csv"));
  EXPECT_NE(r.out.find("table2-sea-cdseer,sea,cdseer"), std::string::npos);
}

TEST_F(RunCommand, GridPresetProducesFourRuns) {
  const auto r = cli(with_short({"run", "--preset", "table3-grid", "--set", "run.output_dir=" + dir_.string(),
                                 "--set", "run.seeds=1"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto root = dir_ / "table3-grid";
  std::istringstream summary(slurp(root / "summary.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(summary, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  for (const char* cell : {"sine-w500-m10", "sine-w500-m15", "sine-w1000-m10", "sine-w1000-m15"}) {
    EXPECT_TRUE(fs::exists(root / cell / "report.json")) << cell;
  }
}

TEST_F(RunCommand, OutputDirectoryComesFromTheEnvironment) {
  ::setenv("SEER_OUTPUT_DIR", (dir_ / "env").c_str(), 1);
  const auto r = cli(with_short({"run", "--preset", "table2-sine-none", "--set", "run.seeds=1"}));
  ::unsetenv("SEER_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "env" / "table2-sine-none" / "report.json"));
  EXPECT_EQ(seer::cli::default_output_dir(), "runs");
}

TEST_F(RunCommand, OutputsAreIdenticalApartFromTheTimestamp) {
  auto once = [&](const std::string& sub) {
    const auto r = cli(with_short({"run", "--preset", "table2-sine-cdseer", "--set",
                                   "run.output_dir=" + (dir_ / sub).string()}));
    EXPECT_EQ(r.code, 0) << r.err;
    return dir_ / sub / "table2-sine-cdseer";
  };
  const auto a = once("a");
  const auto b = once("b");
  for (const char* f : {"summary.csv", "logs/seed-1.csv", "logs/seed-2.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  auto ja = nlohmann::json::parse(slurp(a / "report.json"));
  auto jb = nlohmann::json::parse(slurp(b / "report.json"));
  EXPECT_FALSE(ja["generated_at"].get<std::string>().empty());
  ja.erase("generated_at");
  jb.erase("generated_at");
  EXPECT_EQ(ja, jb);
}

using EvalCommand = TempDir;

TEST_F(EvalCommand, ScoresALogAgainstTheSidecar) {
  const auto run = cli(with_short({"run", "--preset", "table2-sea-pht", "--set", "run.output_dir=" + dir_.string(),
                                   "--set", "run.seeds=1"}));
  ASSERT_EQ(run.code, 0) << run.err;
  const auto gen = cli({"generate", "--dataset", "sea", "--n", "5000", "--drifts", "3000:1", "-o",
                        (dir_ / "sea.csv").string()});
  ASSERT_EQ(gen.code, 0) << gen.err;

  const auto log = (dir_ / "table2-sea-pht" / "logs" / "seed-1.csv").string();
  const auto r = cli({"eval", "--log", log, "--gt", (dir_ / "sea.schedule.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(r.out);
  EXPECT_EQ(m["horizon"], 2000);
  EXPECT_EQ(m["ground_truth"], nlohmann::json::array({3000}));
  EXPECT_EQ(m["tp"].get<int>() + m["fn"].get<int>(), 1);
  EXPECT_TRUE(m.contains("fp"));

  // The report's own metrics for this seed agree with a plain index list.
  std::ofstream(dir_ / "gt.txt") << "3000\n";
  const auto again = cli({"eval", "--log", log, "--gt", (dir_ / "gt.txt").string(), "--horizon", "2000"});
  ASSERT_EQ(again.code, 0);
  const auto report = nlohmann::json::parse(slurp(dir_ / "table2-sea-pht" / "report.json"));
  const auto& seed = report["seeds"][0]["metrics"];
  const auto m2 = nlohmann::json::parse(again.out);
  EXPECT_EQ(m2["tp"], seed["tp"]);
  EXPECT_EQ(m2["fp"], seed["fp"]);
  EXPECT_EQ(m2["fn"], seed["fn"]);
  EXPECT_DOUBLE_EQ(m2["macc"].get<double>(), seed["macc"].get<double>());
}

TEST_F(EvalCommand, HorizonChangesTheMatching) {
  std::ofstream log(dir_ / "log.csv");
  log << "index,y_online,y_insp,y_true,error,alarm,requested,labeled,labels_used\n";
  for (int i = 0; i < 100; ++i) log << i << ",0,,0,0," << (i == 60 ? 1 : 0) << ",0,0,0\n";
  log.close();
  std::ofstream(dir_ / "gt.txt") << "40, 500\n";
  const auto wide = nlohmann::json::parse(cli({"eval", "--log", (dir_ / "log.csv").string(), "--gt",
                                               (dir_ / "gt.txt").string()}).out);
  EXPECT_EQ(wide["tp"], 1);
  EXPECT_EQ(wide["ground_truth"], nlohmann::json::array({40}));  // 500 lies outside the log
  const auto narrow = nlohmann::json::parse(cli({"eval", "--log", (dir_ / "log.csv").string(), "--gt",
                                                 (dir_ / "gt.txt").string(), "--horizon", "10"}).out);
  EXPECT_EQ(narrow["tp"], 0);
  EXPECT_EQ(narrow["fp"], 1);
  EXPECT_EQ(narrow["fn"], 1);
  EXPECT_EQ(narrow["horizon"], 10);
}

TEST_F(EvalCommand, MalformedRowIsARuntimeFailureNamingTheRow) {
  std::ofstream(dir_ / "log.csv") << "index,y_online,y_insp,y_true,error,alarm,requested,labeled,labels_used\n"
                                  << "0,0,,0,0,0,0,0,0\n"
                                  << "1,0,,zero,0,0,0,0,0\n";
  std::ofstream(dir_ / "gt.txt") << "1\n";
  const auto r = cli({"eval", "--log", (dir_ / "log.csv").string(), "--gt", (dir_ / "gt.txt").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
}

TEST_F(EvalCommand, MissingArgumentsAreUsageErrors) {
  EXPECT_EQ(cli({"eval", "--log", "x.csv"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
}
