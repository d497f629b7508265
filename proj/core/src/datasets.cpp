#include "seer/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace seer {

DriftSchedule DriftSchedule::standard() { return DriftSchedule{{{3000, 1}, {10000, 2}}}; }

void DriftSchedule::validate(int n_concepts) const {
  for (std::size_t i = 0; i < changes.size(); ++i) {
    const auto& c = changes[i];
    if (c.concept_id < 0 || c.concept_id >= n_concepts) {
      throw InvalidArgument("unknown concept id " + std::to_string(c.concept_id));
    }
    if (i > 0 && c.start <= changes[i - 1].start) {
      throw InvalidArgument("drift schedule indices must strictly increase");
    }
  }
}

int DriftSchedule::concept_at(StreamIndex index) const noexcept {
  int active = 0;
  for (const auto& c : changes) {
    if (c.start > index) break;
    active = c.concept_id;
  }
  return active;
}

std::vector<StreamIndex> DriftSchedule::drift_indices() const {
  std::vector<StreamIndex> out;
  for (const auto& c : changes) out.push_back(c.start);
  return out;
}

std::string_view to_string(Generator g) noexcept {
  switch (g) {
    case Generator::sine:
      return "sine";
    case Generator::sea:
      return "sea";
    case Generator::csv:
      return "csv";
  }
  return "unknown";
}

std::optional<Generator> parse_generator(std::string_view name) noexcept {
  if (name == "sine") return Generator::sine;
  if (name == "sea") return Generator::sea;
  if (name == "csv") return Generator::csv;
  return std::nullopt;
}

ClassId sine_label(int concept_id, double x, double y) {
  switch (concept_id) {
    case 0:
      return y < std::sin(x) ? 1 : 0;
    case 1:
      return y < std::sin(x) ? 0 : 1;
    case 2:
      return y < 0.5 + 0.3 * std::sin(3.0 * std::numbers::pi * x) ? 1 : 0;
    default:
      throw InvalidArgument("sine has no concept " + std::to_string(concept_id));
  }
}

ClassId sea_label(int concept_id, double att1, double att2) {
  static constexpr double thresholds[] = {8.0, 9.0, 7.0};
  if (concept_id < 0 || concept_id > 2) {
    throw InvalidArgument("sea has no concept " + std::to_string(concept_id));
  }
  return att1 + att2 >= thresholds[concept_id] ? 1 : 0;
}

namespace {

// mt19937_64 output is fixed by the standard; the conversion to [0, 1) is done here
// so streams are bit-identical across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Rule>
std::vector<DataPoint> generate(std::size_t n, const DriftSchedule& schedule, std::uint64_t seed,
                                double label_noise, double scale, Rule rule) {
  schedule.validate(3);
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw InvalidArgument("label noise must lie in [0, 1]");
  }
  std::mt19937_64 features(seed);
  std::mt19937_64 noise(seed ^ 0x5bd1e9955bd1e995ULL);
  std::vector<DataPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = scale * unit(features);
    const double b = scale * unit(features);
    ClassId label = rule(schedule.concept_at(i), a, b);
    if (unit(noise) < label_noise) label = 1 - label;
    out.emplace_back(i, std::vector<double>{a, b}, label);
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::vector<DataPoint> gen_sine(std::size_t n, const DriftSchedule& schedule, std::uint64_t seed,
                                double label_noise) {
  return generate(n, schedule, seed, label_noise, 1.0, sine_label);
}

std::vector<DataPoint> gen_sea(std::size_t n, const DriftSchedule& schedule, std::uint64_t seed,
                               double label_noise) {
  return generate(n, schedule, seed, label_noise, 10.0, sea_label);
}

LoadedCsv read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++row;
      if (!is_blank(line)) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError("empty file", 0);

  std::size_t width = 0;
  bool pending = false;  // `line` holds a data row already
  if (schema.header) {
    header = split_row(line);
    width = header.size();
  } else {
    width = split_row(line).size();
    for (std::size_t i = 0; i < width; ++i) header.push_back(std::to_string(i));
    pending = true;
  }

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column '" + name + "'", schema.header ? 1 : 0);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_col = column_of(schema.label_column);
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < width; ++i) {
      if (i != label_col && header[i] != "concept") feature_cols.push_back(i);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column_of(name));
  }
  if (feature_cols.empty()) throw ParseError("no feature columns", schema.header ? 1 : 0);

  LoadedCsv out;
  for (std::size_t c : feature_cols) out.feature_names.push_back(header[c]);
  std::unordered_map<std::string, ClassId> class_ids;
  StreamIndex index = 0;
  while (pending || next_line()) {
    pending = false;
    const auto cells = split_row(line);
    if (cells.size() != width) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(width) +
                           " cells, found " + std::to_string(cells.size()),
                       row);
    }
    std::vector<double> features;
    features.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      auto v = parse_number(cells[c]);
      if (!v) {
        throw ParseError("row " + std::to_string(row) + ": non-numeric value '" + cells[c] +
                             "' in column '" + header[c] + "'",
                         row);
      }
      features.push_back(*v);
    }
    const auto& label_text = cells[label_col];
    if (label_text.empty()) throw ParseError("row " + std::to_string(row) + ": empty label", row);
    auto [it, inserted] = class_ids.try_emplace(label_text, static_cast<ClassId>(class_ids.size()));
    if (inserted) out.class_names.push_back(label_text);
    out.points.emplace_back(index++, std::move(features), it->second);
  }
  if (out.points.empty()) throw ParseError("file has a header but no data rows", row);
  return out;
}

LoadedCsv load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const std::vector<DataPoint>& points, const DriftSchedule& schedule) {
  const std::size_t dim = points.empty() ? 0 : points.front().dim();
  for (std::size_t d = 0; d < dim; ++d) out << 'x' << d << ',';
  out << "label,concept\n";
  char buf[32];
  for (const auto& p : points) {
    for (double v : p.features()) {
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << GroundTruth::label(p).value_or(0) << ',' << schedule.concept_at(p.index()) << '\n';
  }
}

std::vector<DataPoint> make_stream(const StreamSpec& spec) {
  if (spec.length == 0 && spec.generator != Generator::csv) {
    throw InvalidArgument("stream length must be positive");
  }
  switch (spec.generator) {
    case Generator::sine:
      return gen_sine(spec.length, spec.schedule, spec.seed, spec.label_noise);
    case Generator::sea:
      return gen_sea(spec.length, spec.schedule, spec.seed, spec.label_noise);
    case Generator::csv: {
      auto loaded = load_csv(spec.csv_path, spec.csv_schema);
      if (spec.length != 0 && loaded.points.size() > spec.length) loaded.points.erase(loaded.points.begin() + static_cast<std::ptrdiff_t>(spec.length), loaded.points.end());
      return std::move(loaded.points);
    }
  }
  throw InvalidArgument("unknown generator");
}

}  // namespace seer
