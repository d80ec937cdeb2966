#include "tweetsent/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace tweetsent {

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>"} {}

Vocabulary Vocabulary::build(const std::vector<TokenSequence>& corpus,
                             int min_freq, int max_size) {
  if (corpus.empty()) throw EmptyCorpus("vocabulary corpus is empty");
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  if (max_size < 2) throw std::invalid_argument("max_size must be >= 2");

  std::map<std::string, long> freq;  // ordered map gives the lexicographic tie-break
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) ++freq[tok];
  }

  std::vector<std::pair<std::string, long>> ranked;
  ranked.reserve(freq.size());
  for (const auto& [tok, n] : freq) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  // Frequency descending; std::map iteration already ordered tokens
  // ascending, and stable_sort preserves that for ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const std::size_t keep =
      std::min(ranked.size(), static_cast<std::size_t>(max_size) - 2);

  Vocabulary vocab;
  vocab.tokens_.reserve(keep + 2);
  for (std::size_t i = 0; i < keep; ++i) {
    vocab.index_.emplace(ranked[i].first, static_cast<int>(vocab.tokens_.size()));
    vocab.tokens_.push_back(ranked[i].first);
  }
  return vocab;
}

void Vocabulary::save(std::ostream& out, int seq_len) const {
  out << "V\t" << size() << "\n";
  out << "L\t" << seq_len << "\n";
  for (int i = 2; i < size(); ++i) {
    out << tokens_[i] << '\t' << i << '\n';
  }
}

std::pair<Vocabulary, int> Vocabulary::load(std::istream& in) {
  std::string line;
  auto read_header = [&](const char* key) -> long {
    if (!std::getline(in, line)) {
      throw std::runtime_error("vocabulary file: missing header");
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != key) {
      throw std::runtime_error(std::string("vocabulary file: expected '") + key +
                               "' header line");
    }
    return std::stol(line.substr(tab + 1));
  };
  const long v = read_header("V");
  const long seq_len = read_header("L");

  Vocabulary vocab;
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("vocabulary file: bad line " + std::to_string(line_no));
    }
    const std::string tok = line.substr(0, tab);
    const int idx = std::stoi(line.substr(tab + 1));
    if (idx != static_cast<int>(vocab.tokens_.size())) {
      throw std::runtime_error("vocabulary file: non-contiguous index at line " +
                               std::to_string(line_no));
    }
    vocab.index_.emplace(tok, idx);
    vocab.tokens_.push_back(tok);
  }
  if (vocab.size() != v) {
    throw std::runtime_error("vocabulary file: header V=" + std::to_string(v) +
                             " but found " + std::to_string(vocab.size()));
  }
  return {std::move(vocab), static_cast<int>(seq_len)};
}

void Vocabulary::save_file(const std::string& path, int seq_len) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  save(out, seq_len);
}

std::pair<Vocabulary, int> Vocabulary::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load(in);
}

EncodedTweet encode(const TokenSequence& tokens, const Vocabulary& vocab, int seq_len) {
  if (seq_len < 1) throw std::invalid_argument("seq_len must be >= 1");
  EncodedTweet enc;
  enc.indices.assign(seq_len, Vocabulary::kPad);
  enc.true_length = std::min<int>(static_cast<int>(tokens.size()), seq_len);
  for (int i = 0; i < enc.true_length; ++i) {
    enc.indices[i] = vocab.index_of(tokens[i]);
  }
  return enc;
}

TokenSequence decode(const EncodedTweet& enc, const Vocabulary& vocab) {
  TokenSequence tokens;
  tokens.reserve(enc.true_length);
  for (int i = 0; i < enc.true_length; ++i) {
    tokens.push_back(vocab.token_of(enc.indices[i]));
  }
  return tokens;
}

}  // namespace tweetsent
