#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tweetsent/dataset.hpp"
#include "tweetsent/lexfeat.hpp"
#include "tweetsent/metrics.hpp"
#include "tweetsent/model.hpp"
#include "tweetsent/vocab.hpp"

namespace tweetsent {

struct ClassTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroCount : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonfiniteGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Adam.

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long step = 0;
  ModelParams m, v;  // first/second moments, shape-matched to the parameters

  static AdamState create(const ModelConfig& model_cfg, const AdamConfig& cfg);
};

// t += 1; m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; bias-corrected
// update theta -= lr * mhat / (sqrt(vhat) + eps).
// Throws NonfiniteGradient when any gradient value is not finite.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& adam);

// ---------------------------------------------------------------------------
// Split, class weights, early stopping.

// Within each label a seeded shuffle assigns ceil(ratio * n_c) indices to
// train, the rest to val. Throws ClassTooSmall when a present class has
// fewer than 2 instances.
std::pair<std::vector<int>, std::vector<int>> stratified_split(
    const std::vector<int>& labels, double ratio, Rng& rng);

// w_c = N_total / (K * n_c) with K = counts.size(). The frequency-weighted
// mean of the weights is exactly 1. Throws ZeroCount on a zero entry.
Vec class_weights(const std::vector<long>& counts);

// True iff the last two recorded validation losses each strictly exceed
// their immediate predecessor. Never fires with fewer than 3 entries.
bool early_stop(const std::vector<double>& val_losses);

// ---------------------------------------------------------------------------
// Training.

struct TrainHistoryRow;

struct TrainOptions {
  double ratio = 0.7;
  int batch_size = 32;
  int max_epochs = 100;
  bool segment_hashtags = true;
  int min_freq = 1;
  int max_vocab = 20000;
  bool use_class_weights = true;
  AdamConfig adam;
  std::function<void(const TrainHistoryRow&)> on_epoch;  // progress hook
};

struct TrainHistoryRow {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // weighted CE + attention L2, mean over examples
  double val_loss = 0;    // unweighted CE on the validation split
  double val_acc = 0;
  double seconds = 0;     // measured wall time for the epoch
};

using TrainHistory = std::vector<TrainHistoryRow>;

// CSV columns: epoch,train_loss,val_loss,val_acc,seconds. The seconds
// column is written as 0.000 unless record_timing is set, keeping the file
// byte-reproducible across runs with the same config and seed.
void write_history_csv(std::ostream& out, const TrainHistory& history,
                       bool record_timing);

struct TrainedModel {
  ModelState state;
  Vocabulary vocab;
  bool segment_hashtags = true;
};

struct TrainResult {
  TrainedModel model;
  TrainHistory history;
  std::vector<TweetRecord> train_split, val_split;
};

// Full training pipeline: shuffle, stratified 70/30 split, vocabulary and
// feature statistics from the training split, inverse-frequency class
// weights, seeded minibatch epochs with Adam, two-consecutive-rise early
// stopping, best-validation-loss weight restoration. cfg.vocab_size is
// ignored on input and set from the built vocabulary.
TrainResult train(ModelConfig cfg, const TrainOptions& opts,
                  const std::vector<TweetRecord>& data,
                  const FeatureResources& res);

// ---------------------------------------------------------------------------
// Inference.

struct Prediction {
  int label = 0;  // argmax with ties broken by lowest class index
  Vec probs;
};

Prediction predict(const TrainedModel& model, const FeatureResources& res,
                   const std::string& raw_text);

// Labeled-dataset evaluation in infer mode. Throws EmptyDataset when no
// records, std::invalid_argument when a record is unlabeled or its label
// index is outside the model's classes.
MetricsReport evaluate(const TrainedModel& model, const FeatureResources& res,
                       const std::vector<TweetRecord>& data);

// One report per dialect tag present in the data.
std::map<std::string, MetricsReport> evaluate_by_dialect(
    const TrainedModel& model, const FeatureResources& res,
    const std::vector<TweetRecord>& data);

// Batch helper shared by training and inference: normalize + features +
// encode for the selected records, standardizing features with the state's
// stored statistics.
Batch make_batch(const std::vector<TweetRecord>& records,
                 const std::vector<int>& which, const Vocabulary& vocab,
                 const ModelState& state, bool segment_hashtags,
                 const FeatureResources& res, bool with_labels);

}  // namespace tweetsent
