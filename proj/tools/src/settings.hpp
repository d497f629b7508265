#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seer/datasets.hpp"
#include "seer/evaluation.hpp"

namespace seer::cli {

/// Flat `section.key -> value` view of an experiment configuration.
/// Later layers win: defaults, then a preset or file, then `--set` overrides.
class Settings {
 public:
  static Settings defaults();
  static std::optional<Settings> preset(std::string_view name);
  static std::vector<std::string> preset_names();

  /// Reads INI text; `[a.b]` sections prefix their keys with `a.b.`. Unknown keys and
  /// syntax errors are appended to `errors` with the source name.
  void merge_ini(std::istream& in, const std::string& source, std::vector<std::string>& errors);
  /// `key=value`; unknown keys are reported in `errors`.
  void set(std::string_view assignment, std::vector<std::string>& errors);

  const std::string& get(const std::string& key) const { return values_.at(key); }
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_ini() const;

 private:
  std::map<std::string, std::string> values_;
};

struct RunPlan {
  std::string name;
  StreamSpec stream;
  ExperimentConfig experiment;
  std::vector<std::uint64_t> seeds;
  bool grid = false;
  bool write_logs = true;
  std::string output_dir;
};

/// Converts and validates every setting; problems found anywhere are collected and
/// thrown together as one ConfigError.
RunPlan resolve(const Settings& settings, std::string_view default_output_dir);

}  // namespace seer::cli
