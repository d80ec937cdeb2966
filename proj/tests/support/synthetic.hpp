#pragma once

// Fixed-seed synthetic corpora used by the training-behavior tests and the
// acceptance suite.

#include <string>
#include <vector>

#include "tweetsent/dataset.hpp"
#include "tweetsent/rng.hpp"

namespace synthetic {

using tweetsent::Label;
using tweetsent::Rng;
using tweetsent::TweetRecord;

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "dia",  "hoy",   "gente", "cosa", "vida", "tiempo",
      "casa", "mundo", "tarde", "noche"};
  return words;
}

inline const std::vector<std::string>& class_words() {
  static const std::vector<std::string> words = {"estupendo", "horrible",
                                                 "regular", "informe"};
  return words;
}

inline std::string filler_sentence(Rng& rng, int n_words) {
  std::string s;
  for (int i = 0; i < n_words; ++i) {
    if (i > 0) s += ' ';
    s += filler_words()[rng.below(filler_words().size())];
  }
  return s;
}

inline TweetRecord record(int id, const std::string& text, Label label) {
  TweetRecord rec;
  rec.id = "t" + std::to_string(id);
  rec.dialect = tweetsent::dialect_tags()[id % tweetsent::dialect_tags().size()];
  rec.text = text;
  rec.label = label;
  return rec;
}

// Class-separable: every tweet carries its class word in plain text.
inline std::vector<TweetRecord> separable_corpus(int per_class,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TweetRecord> out;
  int id = 0;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const std::string text =
          class_words()[c] + " " + filler_sentence(rng, 3);
      out.push_back(record(id++, text, static_cast<Label>(c)));
    }
  }
  return out;
}

// The class word only appears inside a PascalCase hashtag whose full body is
// unique per tweet. Without segmentation each hashtag collapses to a
// singleton token, so the label signal is unreachable; with segmentation the
// class word becomes a shared token.
inline std::vector<TweetRecord> hashtag_signal_corpus(int per_class,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TweetRecord> out;
  int id = 0;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < per_class; ++i) {
      std::string word = class_words()[c];
      word[0] = static_cast<char>(word[0] - 'a' + 'A');
      const std::string tag =
          "#" + word + "Caso" + std::to_string(id);  // unique body per tweet
      const std::string text = tag + " " + filler_sentence(rng, 3);
      out.push_back(record(id++, text, static_cast<Label>(c)));
    }
  }
  return out;
}

// Same shape as hashtag_signal_corpus but without any '#': the
// segment_hashtags flag must then be a no-op.
inline std::vector<TweetRecord> hashtag_free_corpus(int per_class,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TweetRecord> out;
  int id = 0;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const std::string text =
          class_words()[c] + " " + filler_sentence(rng, 4);
      out.push_back(record(id++, text, static_cast<Label>(c)));
    }
  }
  return out;
}

// 9:1 binary task (P = majority, N = minority). The minority marker token
// also shows up in 10% of majority tweets, so the posterior given the marker
// sits near the decision boundary; class weighting pushes it across.
inline std::vector<TweetRecord> skewed_binary_corpus(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TweetRecord> out;
  const int minority = n / 10;
  for (int i = 0; i < n; ++i) {
    const bool is_minority = i < minority;
    std::string text = filler_sentence(rng, 4);
    if (is_minority || rng.bernoulli(0.1)) text += " raro";
    out.push_back(record(i, text, is_minority ? Label::kN : Label::kP));
  }
  return out;
}

}  // namespace synthetic
