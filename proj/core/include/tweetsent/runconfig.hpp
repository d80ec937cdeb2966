#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tweetsent/model.hpp"
#include "tweetsent/train.hpp"

namespace tweetsent {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. '#' lines are comments. Unknown keys are
// rejected. The training manifest uses the same format, so a run can be
// reproduced with `train --config <manifest>`.
struct RunConfig {
  // paths
  std::string train_file;
  std::string dev_file;      // optional; merged with train_file when set
  std::string lexicon_es;    // optional resources; empty means no lexicon
  std::string lexicon_en;
  std::string bilingual;
  std::string out_dir = "out";

  // model
  int seq_len = 50;
  int embed_dim = 128;
  int hidden1 = 128;
  int hidden2 = 64;
  int n_classes = 4;
  double dropout = 0.4;
  double recurrent_dropout = 0.4;
  double l2_attn_w = 1e-4;
  double l2_attn_b = 1e-4;

  // training
  std::uint64_t seed = 1;
  double ratio = 0.7;
  double lr = 0.0005;
  int batch_size = 32;
  int max_epochs = 100;
  int min_freq = 1;
  int max_vocab = 20000;
  bool segment_hashtags = true;
  bool use_class_weights = true;
  bool record_timing = false;

  static RunConfig from_stream(std::istream& in);
  static RunConfig from_file(const std::string& path);

  // Every key, resolved; re-parsable by from_stream.
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  ModelConfig model_config() const;
  TrainOptions train_options() const;

  FeatureResources load_resources() const;
};

}  // namespace tweetsent
