#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tweetsent {

// Output classes with fixed indices.
enum class Label { kP = 0, kN = 1, kNeu = 2, kNone = 3 };

constexpr int kNumLabels = 4;

const char* label_name(Label label);
std::optional<Label> label_from_name(const std::string& name);

inline int label_index(Label label) { return static_cast<int>(label); }

// Canonical dialect tags.
inline const std::array<std::string, 5>& dialect_tags() {
  static const std::array<std::string, 5> tags = {"ES", "PE", "CR", "UY", "MX"};
  return tags;
}

struct TweetRecord {
  std::string id;
  std::string dialect;                // one of dialect_tags()
  std::string text;                   // raw tweet text
  std::optional<Label> label;         // absent for unlabeled test rows
};

struct ParseError : std::runtime_error {
  ParseError(int line_no, const std::string& why)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + why),
        line(line_no) {}
  int line;
};

struct UnknownLabel : ParseError {
  UnknownLabel(int line_no, const std::string& value)
      : ParseError(line_no, "unknown label '" + value + "'") {}
};

struct DuplicateId : ParseError {
  DuplicateId(int line_no, const std::string& id)
      : ParseError(line_no, "duplicate id '" + id + "'") {}
};

struct DatasetFile {
  std::vector<TweetRecord> records;
};

// TSV format: `id<TAB>dialect<TAB>label<TAB>text`, UTF-8, one header line
// required, label '-' for unlabeled rows. "UR" is accepted for Uruguay and
// canonicalized to "UY". Trailing empty lines are ignored. A header-only
// file yields an empty dataset and a warning on stderr.
DatasetFile load_dataset(std::istream& in);
DatasetFile load_dataset(const std::string& path);

void save_dataset(const DatasetFile& ds, std::ostream& out);
void save_dataset(const DatasetFile& ds, const std::string& path);

// Per-label counts overall and per dialect.
struct LabelDistribution {
  std::map<std::string, std::array<long, kNumLabels>> per_dialect;
  std::array<long, kNumLabels> total = {0, 0, 0, 0};
  long unlabeled = 0;
  long records = 0;
};

LabelDistribution stats(const DatasetFile& ds);

std::string format_stats_text(const LabelDistribution& dist);
std::string format_stats_csv(const LabelDistribution& dist);

}  // namespace tweetsent
