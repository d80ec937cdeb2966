#include "tweetsent/lexfeat.hpp"

#include <fstream>
#include <optional>

#include "utf8.hpp"

namespace tweetsent {

namespace {

bool has_ascii_space(const std::string& s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r')
      return true;
  }
  return false;
}

std::optional<Polarity> parse_polarity(const std::string& s) {
  if (s == "POS") return Polarity::kPos;
  if (s == "NEG") return Polarity::kNeg;
  if (s == "NEU") return Polarity::kNeu;
  return std::nullopt;
}

// Shared line reader for the two tab-separated resource formats.
template <typename OnEntry>
void read_resource(std::istream& in, OnEntry&& on_entry) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw LexiconParseError(line_no, line, "expected <word>\\t<value>");
    }
    on_entry(line_no, line, line.substr(0, tab), line.substr(tab + 1));
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

}  // namespace

SentimentLexicon load_lexicon(std::istream& in, const std::string& language) {
  SentimentLexicon lex;
  lex.language = language;
  read_resource(in, [&lex](int line_no, const std::string& line,
                           const std::string& word, const std::string& value) {
    if (word.empty() || has_ascii_space(word)) {
      throw LexiconParseError(line_no, line, "bad word field");
    }
    const auto pol = parse_polarity(value);
    if (!pol) {
      throw LexiconParseError(line_no, line, "polarity must be POS, NEG or NEU");
    }
    lex.entries[lowercase(word)] = *pol;  // last occurrence wins
  });
  return lex;
}

SentimentLexicon load_lexicon_file(const std::string& path, const std::string& language) {
  auto in = open_or_throw(path);
  return load_lexicon(in, language);
}

BilingualTable load_bilingual(std::istream& in) {
  BilingualTable table;
  read_resource(in, [&table](int line_no, const std::string& line,
                             const std::string& es, const std::string& en) {
    if (es.empty() || en.empty() || has_ascii_space(es) || has_ascii_space(en)) {
      throw LexiconParseError(line_no, line, "bad bilingual entry");
    }
    table.entries[lowercase(es)] = lowercase(en);
  });
  return table;
}

BilingualTable load_bilingual_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load_bilingual(in);
}

namespace {

void bump(PolarityCounts& counts, Polarity p) {
  switch (p) {
    case Polarity::kPos: ++counts.pos; break;
    case Polarity::kNeg: ++counts.neg; break;
    case Polarity::kNeu: ++counts.neu; break;
  }
}

}  // namespace

PolarityCounts polarity_counts(const TokenSequence& tokens, const SentimentLexicon& lex) {
  PolarityCounts counts;
  for (const auto& t : tokens) {
    auto it = lex.entries.find(t);
    if (it != lex.entries.end()) bump(counts, it->second);
  }
  return counts;
}

PolarityCounts english_polarity_counts(const TokenSequence& tokens,
                                       const BilingualTable& table,
                                       const SentimentLexicon& lex_en) {
  PolarityCounts counts;
  for (const auto& t : tokens) {
    auto es = table.entries.find(t);
    if (es == table.entries.end()) continue;
    auto en = lex_en.entries.find(es->second);
    if (en != lex_en.entries.end()) bump(counts, en->second);
  }
  return counts;
}

double subjectivity(const TokenSequence& tokens, const SentimentLexicon& lex_es) {
  if (tokens.empty()) return 0.0;
  const auto counts = polarity_counts(tokens, lex_es);
  return static_cast<double>(counts.pos + counts.neg) /
         static_cast<double>(tokens.size());
}

PunctuationCounts punctuation_counts(const std::string& raw) {
  PunctuationCounts counts;
  for (char32_t c : utf8::decode(raw)) {
    switch (c) {
      case U'?':
      case 0x00BF: ++counts.q_marks; break;
      case U'!':
      case 0x00A1: ++counts.exclaims; break;
      case U'.': ++counts.full_stops; break;
      default: break;
    }
  }
  return counts;
}

FeatureVector extract_features(const std::string& raw, const TokenSequence& tokens,
                               const FeatureResources& res) {
  FeatureVector f;
  const auto es = polarity_counts(tokens, res.lexicon_es);
  f.es_pos = es.pos;
  f.es_neg = es.neg;
  f.es_neu = es.neu;
  const auto en = english_polarity_counts(tokens, res.bilingual, res.lexicon_en);
  f.en_pos = en.pos;
  f.en_neg = en.neg;
  f.en_neu = en.neu;
  f.subjectivity = subjectivity(tokens, res.lexicon_es);
  const auto punct = punctuation_counts(raw);
  f.q_marks = punct.q_marks;
  f.exclaims = punct.exclaims;
  f.full_stops = punct.full_stops;
  return f;
}

}  // namespace tweetsent
