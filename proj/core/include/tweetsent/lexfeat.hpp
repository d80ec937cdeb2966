#pragma once

#include <array>
#include <istream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "tweetsent/textprep.hpp"

namespace tweetsent {

enum class Polarity { kPos, kNeg, kNeu };

// Raised for malformed lines in lexicon or bilingual-table files.
struct LexiconParseError : std::runtime_error {
  LexiconParseError(int line_no, const std::string& content, const std::string& why)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + why +
                           " [" + content + "]"),
        line(line_no) {}
  int line;
};

// Word -> polarity map. Keys are lowercase and whitespace-free.
struct SentimentLexicon {
  std::unordered_map<std::string, Polarity> entries;
  std::string language;  // "es" or "en"

  bool contains(const std::string& w) const { return entries.count(w) != 0; }
};

// Static Spanish -> English word lookup (stands in for online translation).
struct BilingualTable {
  std::unordered_map<std::string, std::string> entries;
};

// The 10 manual features, in their fixed order.
struct FeatureVector {
  int es_pos = 0, es_neg = 0, es_neu = 0;
  int en_pos = 0, en_neg = 0, en_neu = 0;
  double subjectivity = 0.0;
  int q_marks = 0, exclaims = 0, full_stops = 0;

  static constexpr int kDim = 10;

  std::array<double, kDim> as_array() const {
    return {static_cast<double>(es_pos),   static_cast<double>(es_neg),
            static_cast<double>(es_neu),   static_cast<double>(en_pos),
            static_cast<double>(en_neg),   static_cast<double>(en_neu),
            subjectivity,                  static_cast<double>(q_marks),
            static_cast<double>(exclaims), static_cast<double>(full_stops)};
  }
};

// File format: one entry per line, `word<TAB>polarity`, polarity in
// {POS, NEG, NEU}. Lines starting with '#' are comments; blank lines are
// skipped. Duplicate words resolve to the last occurrence.
SentimentLexicon load_lexicon(std::istream& in, const std::string& language);
SentimentLexicon load_lexicon_file(const std::string& path, const std::string& language);

// File format: `es_word<TAB>en_word` per line, same comment/blank rules.
BilingualTable load_bilingual(std::istream& in);
BilingualTable load_bilingual_file(const std::string& path);

struct PolarityCounts {
  int pos = 0, neg = 0, neu = 0;
};

// Each token contributes 1 to the bucket of its polarity when present in the
// lexicon; tokens are counted with multiplicity.
PolarityCounts polarity_counts(const TokenSequence& tokens, const SentimentLexicon& lex);

// Tokens are first mapped through the bilingual table (absent tokens are
// skipped), then counted against the English lexicon.
PolarityCounts english_polarity_counts(const TokenSequence& tokens,
                                       const BilingualTable& table,
                                       const SentimentLexicon& lex_en);

// Fraction of tokens whose Spanish polarity is POS or NEG; 0 for an empty
// sequence.
double subjectivity(const TokenSequence& tokens, const SentimentLexicon& lex_es);

struct PunctuationCounts {
  int q_marks = 0, exclaims = 0, full_stops = 0;
};

// Counts '?', '!', '.' on the raw text (before any normalization). The
// inverted marks U+00BF and U+00A1 count toward q_marks and exclaims.
PunctuationCounts punctuation_counts(const std::string& raw);

struct FeatureResources {
  SentimentLexicon lexicon_es;
  SentimentLexicon lexicon_en;
  BilingualTable bilingual;
};

FeatureVector extract_features(const std::string& raw, const TokenSequence& tokens,
                               const FeatureResources& res);

}  // namespace tweetsent
