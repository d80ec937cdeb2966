#pragma once

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tweetsent/textprep.hpp"

namespace tweetsent {

struct EmptyCorpus : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Token -> index mapping with reserved PAD=0 and UNK=1. Indices are
// contiguous 0..V-1.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  // Empty vocabulary: just the reserved PAD and UNK slots.
  Vocabulary();

  // Tokens with frequency >= min_freq, ranked by (frequency desc, token asc),
  // truncated to max_size-2, assigned indices from 2 upward.
  // Throws EmptyCorpus when the corpus has no sequences.
  static Vocabulary build(const std::vector<TokenSequence>& corpus, int min_freq,
                          int max_size);

  int size() const { return static_cast<int>(tokens_.size()); }

  // Index of token, or kUnk when absent.
  int index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  // Token at index; reserved slots report "<pad>" and "<unk>".
  const std::string& token_of(int index) const { return tokens_.at(index); }

  // Text persistence: two header lines recording V and L, then one
  // `token<TAB>index` line per non-reserved token in index order.
  void save(std::ostream& out, int seq_len) const;
  static std::pair<Vocabulary, int> load(std::istream& in);

  void save_file(const std::string& path, int seq_len) const;
  static std::pair<Vocabulary, int> load_file(const std::string& path);

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> tokens_;
};

// Fixed-length index form of one tweet.
struct EncodedTweet {
  std::vector<int> indices;  // exactly L values in [0, V)
  int true_length = 0;       // min(token count, L); positions beyond it are PAD
};

// Maps each token to its index (UNK when absent), right-truncates to
// seq_len, right-pads with PAD.
EncodedTweet encode(const TokenSequence& tokens, const Vocabulary& vocab, int seq_len);

// In-vocabulary tokens of an encoded tweet; UNK positions yield "<unk>".
TokenSequence decode(const EncodedTweet& enc, const Vocabulary& vocab);

}  // namespace tweetsent
