#include "tweetsent/dataset.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_set>

namespace tweetsent {

const char* label_name(Label label) {
  switch (label) {
    case Label::kP: return "P";
    case Label::kN: return "N";
    case Label::kNeu: return "NEU";
    case Label::kNone: return "NONE";
  }
  return "?";
}

std::optional<Label> label_from_name(const std::string& name) {
  if (name == "P") return Label::kP;
  if (name == "N") return Label::kN;
  if (name == "NEU") return Label::kNeu;
  if (name == "NONE") return Label::kNone;
  return std::nullopt;
}

namespace {

std::string canonical_dialect(const std::string& tag, int line_no) {
  if (tag == "UR") return "UY";  // the corpus uses both spellings for Uruguay
  for (const auto& known : dialect_tags()) {
    if (tag == known) return tag;
  }
  throw ParseError(line_no, "unknown dialect '" + tag + "'");
}

}  // namespace

DatasetFile load_dataset(std::istream& in) {
  DatasetFile ds;
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header line");
  }

  std::unordered_set<std::string> seen_ids;
  int line_no = 1;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // trailing blank lines
    any_content = true;

    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    const auto t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
    if (t3 == std::string::npos) {
      throw ParseError(line_no, "expected id<TAB>dialect<TAB>label<TAB>text");
    }

    TweetRecord rec;
    rec.id = line.substr(0, t1);
    rec.dialect = canonical_dialect(line.substr(t1 + 1, t2 - t1 - 1), line_no);
    const std::string label_str = line.substr(t2 + 1, t3 - t2 - 1);
    rec.text = line.substr(t3 + 1);

    if (rec.id.empty()) throw ParseError(line_no, "empty id");
    if (!seen_ids.insert(rec.id).second) throw DuplicateId(line_no, rec.id);

    if (label_str != "-") {
      const auto label = label_from_name(label_str);
      if (!label) throw UnknownLabel(line_no, label_str);
      rec.label = label;
    }
    ds.records.push_back(std::move(rec));
  }

  if (!any_content) {
    std::cerr << "warning: dataset contains a header but no records\n";
  }
  return ds;
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_dataset(in);
}

void save_dataset(const DatasetFile& ds, std::ostream& out) {
  out << "id\tdialect\tlabel\ttext\n";
  for (const auto& rec : ds.records) {
    out << rec.id << '\t' << rec.dialect << '\t'
        << (rec.label ? label_name(*rec.label) : "-") << '\t' << rec.text << '\n';
  }
}

void save_dataset(const DatasetFile& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  save_dataset(ds, out);
}

LabelDistribution stats(const DatasetFile& ds) {
  LabelDistribution dist;
  dist.records = static_cast<long>(ds.records.size());
  for (const auto& rec : ds.records) {
    auto& row = dist.per_dialect[rec.dialect];  // value-initialized to zeros
    if (rec.label) {
      ++row[label_index(*rec.label)];
      ++dist.total[label_index(*rec.label)];
    } else {
      ++dist.unlabeled;
    }
  }
  return dist;
}

std::string format_stats_text(const LabelDistribution& dist) {
  std::ostringstream out;
  out << std::left << std::setw(9) << "Dialect";
  for (int k = 0; k < kNumLabels; ++k) {
    out << std::right << std::setw(8) << label_name(static_cast<Label>(k));
  }
  out << std::right << std::setw(8) << "Total" << "\n";

  auto row = [&out](const std::string& name, const std::array<long, kNumLabels>& counts) {
    long total = 0;
    out << std::left << std::setw(9) << name;
    for (int k = 0; k < kNumLabels; ++k) {
      out << std::right << std::setw(8) << counts[k];
      total += counts[k];
    }
    out << std::right << std::setw(8) << total << "\n";
  };

  for (const auto& [dialect, counts] : dist.per_dialect) {
    row(dialect, counts);
  }
  row("ALL", dist.total);
  if (dist.unlabeled > 0) {
    out << "(" << dist.unlabeled << " unlabeled records not shown)\n";
  }
  return out.str();
}

std::string format_stats_csv(const LabelDistribution& dist) {
  std::ostringstream out;
  out << "dialect,label,count\n";
  for (const auto& [dialect, counts] : dist.per_dialect) {
    for (int k = 0; k < kNumLabels; ++k) {
      out << dialect << ',' << label_name(static_cast<Label>(k)) << ','
          << counts[k] << '\n';
    }
  }
  for (int k = 0; k < kNumLabels; ++k) {
    out << "ALL," << label_name(static_cast<Label>(k)) << ',' << dist.total[k]
        << '\n';
  }
  return out.str();
}

}  // namespace tweetsent
