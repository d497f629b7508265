#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seer/stream.hpp"

namespace seer {

/// Concept changes as (start index, concept id); concept 0 is active from index 0.
struct DriftSchedule {
  struct Change {
    StreamIndex start = 0;
    int concept_id = 0;

    friend bool operator==(const Change&, const Change&) = default;
  };

  std::vector<Change> changes;

  /// Drifts at 3,000 (concept 1) and 10,000 (concept 2).
  static DriftSchedule standard();

  /// Throws InvalidArgument unless starts strictly increase and concepts are in [0, n_concepts).
  void validate(int n_concepts) const;
  int concept_at(StreamIndex index) const noexcept;
  std::vector<StreamIndex> drift_indices() const;
};

enum class Generator { sine, sea, csv };

std::string_view to_string(Generator g) noexcept;
std::optional<Generator> parse_generator(std::string_view name) noexcept;

struct CsvSchema {
  std::vector<std::string> feature_columns;  // empty = every column except label/concept
  std::string label_column = "label";        // header name, or a 0-based position without header
  bool header = true;
};

struct StreamSpec {
  Generator generator = Generator::sine;
  std::size_t length = 16000;
  DriftSchedule schedule = DriftSchedule::standard();
  std::uint64_t seed = 1;
  double label_noise = 0.0;  // probability of flipping a generated label
  std::string csv_path;
  CsvSchema csv_schema;
};

/// Sine: (x, y) uniform on [0,1]^2. Concept 0 labels y < sin(x) positive, concept 1
/// is its negation, concept 2 labels y < 0.5 + 0.3 sin(3 pi x) positive.
std::vector<DataPoint> gen_sine(std::size_t n, const DriftSchedule& schedule, std::uint64_t seed,
                                double label_noise = 0.0);

/// SEA (two attributes): uniform on [0,10]^2, positive when att1 + att2 >= 8 / 9 / 7
/// for concepts 0 / 1 / 2.
std::vector<DataPoint> gen_sea(std::size_t n, const DriftSchedule& schedule, std::uint64_t seed,
                               double label_noise = 0.0);

/// Noise-free concept rules, exposed for replay checks.
ClassId sine_label(int concept_id, double x, double y);
ClassId sea_label(int concept_id, double att1, double att2);

struct LoadedCsv {
  std::vector<DataPoint> points;
  std::vector<std::string> class_names;  // class id -> original label text
  std::vector<std::string> feature_names;
};

/// Points indexed in file order, labels densified by first appearance. Errors are
/// ParseError carrying the 1-based file row.
LoadedCsv load_csv(const std::string& path, const CsvSchema& schema);
LoadedCsv read_csv(std::istream& in, const CsvSchema& schema);

/// Writes `x0..x{d-1},label,concept`; the concept column is provenance only and is
/// skipped by load_csv's default schema.
void write_csv(std::ostream& out, const std::vector<DataPoint>& points, const DriftSchedule& schedule);

/// Builds the stream a spec describes (generating or loading).
std::vector<DataPoint> make_stream(const StreamSpec& spec);

}  // namespace seer
