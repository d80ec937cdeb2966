#include "tweetsent/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace tweetsent {

// ---------------------------------------------------------------------------
// Adam.

AdamState AdamState::create(const ModelConfig& model_cfg, const AdamConfig& cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m = ModelParams::zeros(model_cfg);
  s.v = ModelParams::zeros(model_cfg);
  return s;
}

namespace {

template <typename T>
void adam_update_tensor(T& p, const T& g, T& m, T& v, const AdamConfig& cfg,
                        double bc1, double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square()).matrix();
  if (cfg.lr != 0.0) {
    p.array() -=
        cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  }
}

}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& adam) {
  auto& g_mut = const_cast<ModelParams&>(grads);  // views only, never written
  auto gt = param_tensors(g_mut);
  for (const auto& t : gt) {
    const bool finite = t.mat ? t.mat->allFinite() : t.vec->allFinite();
    if (!finite) {
      throw NonfiniteGradient("gradient '" + t.name + "' has non-finite values");
    }
  }

  adam.step += 1;
  const double bc1 = 1.0 - std::pow(adam.cfg.beta1, adam.step);
  const double bc2 = 1.0 - std::pow(adam.cfg.beta2, adam.step);

  auto pt = param_tensors(params);
  auto mt = param_tensors(adam.m);
  auto vt = param_tensors(adam.v);
  for (std::size_t i = 0; i < pt.size(); ++i) {
    if (pt[i].mat) {
      adam_update_tensor(*pt[i].mat, *gt[i].mat, *mt[i].mat, *vt[i].mat,
                         adam.cfg, bc1, bc2);
    } else {
      adam_update_tensor(*pt[i].vec, *gt[i].vec, *mt[i].vec, *vt[i].vec,
                         adam.cfg, bc1, bc2);
    }
  }
}

// ---------------------------------------------------------------------------
// Split, class weights, early stopping.

std::pair<std::vector<int>, std::vector<int>> stratified_split(
    const std::vector<int>& labels, double ratio, Rng& rng) {
  if (ratio < 0.0 || ratio > 1.0) {
    throw std::invalid_argument("split ratio must lie in [0, 1]");
  }
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[labels[i]].push_back(static_cast<int>(i));
  }

  std::vector<int> train, val;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw ClassTooSmall("class " + std::to_string(label) + " has only " +
                          std::to_string(idx.size()) + " instance(s)");
    }
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_train ? train : val).push_back(idx[k]);
    }
  }
  return {std::move(train), std::move(val)};
}

Vec class_weights(const std::vector<long>& counts) {
  const auto k = static_cast<int>(counts.size());
  long total = 0;
  for (int c = 0; c < k; ++c) {
    if (counts[c] <= 0) {
      throw ZeroCount("class " + std::to_string(c) + " has zero count");
    }
    total += counts[c];
  }
  Vec w(k);
  for (int c = 0; c < k; ++c) {
    w(c) = static_cast<double>(total) / (static_cast<double>(k) * counts[c]);
  }
  return w;
}

bool early_stop(const std::vector<double>& val_losses) {
  const auto n = val_losses.size();
  if (n < 3) return false;
  return val_losses[n - 1] > val_losses[n - 2] &&
         val_losses[n - 2] > val_losses[n - 3];
}

void write_history_csv(std::ostream& out, const TrainHistory& history,
                       bool record_timing) {
  out << "epoch,train_loss,val_loss,val_acc,seconds\n";
  for (const auto& row : history) {
    std::ostringstream line;
    line << row.epoch << ',' << std::setprecision(12) << row.train_loss << ','
         << row.val_loss << ',' << row.val_acc << ',' << std::fixed
         << std::setprecision(3) << (record_timing ? row.seconds : 0.0);
    out << line.str() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Batch preparation.

namespace {

struct PreparedSet {
  Eigen::MatrixXi indices;   // N x L
  std::vector<int> lengths;  // clamped to >= 1
  Mat feats;                 // N x n_feat, standardized
  std::vector<int> labels;   // -1 when unlabeled
};

PreparedSet prepare_all(const std::vector<TweetRecord>& records,
                        const std::vector<int>& which, const Vocabulary& vocab,
                        const ModelState& state, bool segment_hashtags,
                        const FeatureResources& res) {
  const int n = static_cast<int>(which.size());
  const int len = state.config.seq_len;
  PreparedSet set;
  set.indices.resize(n, len);
  set.lengths.resize(n);
  set.feats.resize(n, state.config.n_feat);
  set.labels.resize(n);

  for (int r = 0; r < n; ++r) {
    const TweetRecord& rec = records[which[r]];
    const TokenSequence tokens = normalize(rec.text, segment_hashtags);
    const EncodedTweet enc = encode(tokens, vocab, len);
    for (int t = 0; t < len; ++t) set.indices(r, t) = enc.indices[t];
    // A PAD-only row still flows through the stack as a length-1 sequence.
    set.lengths[r] = std::max(1, enc.true_length);

    const auto f = extract_features(rec.text, tokens, res).as_array();
    for (int j = 0; j < state.config.n_feat; ++j) {
      set.feats(r, j) = (f[j] - state.feat_mean(j)) / state.feat_std(j);
    }
    set.labels[r] = rec.label ? label_index(*rec.label) : -1;
  }
  return set;
}

Batch slice_batch(const PreparedSet& set, const std::vector<int>& rows,
                  bool with_labels) {
  Batch b;
  const int n = static_cast<int>(rows.size());
  b.indices.resize(n, set.indices.cols());
  b.lengths.resize(n);
  b.feats.resize(n, set.feats.cols());
  for (int r = 0; r < n; ++r) {
    b.indices.row(r) = set.indices.row(rows[r]);
    b.lengths[r] = set.lengths[rows[r]];
    b.feats.row(r) = set.feats.row(rows[r]);
  }
  if (with_labels) {
    b.labels.resize(n);
    for (int r = 0; r < n; ++r) b.labels[r] = set.labels[rows[r]];
  }
  return b;
}

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

int argmax_row(const Mat& probs, int row) {
  int best = 0;
  for (int k = 1; k < probs.cols(); ++k) {
    if (probs(row, k) > probs(row, best)) best = k;  // ties keep the lowest index
  }
  return best;
}

// Unweighted cross-entropy and accuracy over a prepared set, infer mode.
struct EvalScore {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> predictions;
};

EvalScore score_set(const PreparedSet& set, const ModelState& state,
                    int batch_size) {
  EvalScore score;
  const int n = static_cast<int>(set.lengths.size());
  score.predictions.resize(n);
  double loss_sum = 0.0;
  long correct = 0;
  long labeled = 0;
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> rows;
    for (int r = start; r < std::min(n, start + batch_size); ++r) {
      rows.push_back(r);
    }
    const Batch batch = slice_batch(set, rows, false);
    const Mat probs = model_forward(batch, state, Mode::kInfer, nullptr, nullptr);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int pred = argmax_row(probs, static_cast<int>(i));
      score.predictions[rows[i]] = pred;
      const int gold = set.labels[rows[i]];
      if (gold >= 0) {
        ++labeled;
        loss_sum += -std::log(std::max(probs(static_cast<int>(i), gold), 1e-12));
        if (pred == gold) ++correct;
      }
    }
  }
  if (labeled > 0) {
    score.loss = loss_sum / labeled;
    score.accuracy = static_cast<double>(correct) / labeled;
  } else {
    score.loss = std::numeric_limits<double>::quiet_NaN();
    score.accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return score;
}

Vec feature_mean(const Mat& feats) { return feats.colwise().mean(); }

Vec feature_std(const Mat& feats, const Vec& mean) {
  const Mat centered = feats.rowwise() - mean.transpose();
  Vec std_dev = centered.array().square().colwise().mean().sqrt();
  for (int j = 0; j < std_dev.size(); ++j) {
    if (std_dev(j) < 1e-12) std_dev(j) = 1.0;  // constant feature
  }
  return std_dev;
}

}  // namespace

Batch make_batch(const std::vector<TweetRecord>& records,
                 const std::vector<int>& which, const Vocabulary& vocab,
                 const ModelState& state, bool segment_hashtags,
                 const FeatureResources& res, bool with_labels) {
  const PreparedSet set =
      prepare_all(records, which, vocab, state, segment_hashtags, res);
  return slice_batch(set, iota_vec(static_cast<int>(which.size())), with_labels);
}

// ---------------------------------------------------------------------------
// Training.

TrainResult train(ModelConfig cfg, const TrainOptions& opts,
                  const std::vector<TweetRecord>& data,
                  const FeatureResources& res) {
  if (data.empty()) throw EmptyDataset("training data is empty");
  for (const auto& rec : data) {
    if (!rec.label) {
      throw std::invalid_argument("unlabeled record '" + rec.id +
                                  "' in training data");
    }
    if (label_index(*rec.label) >= cfg.n_classes) {
      throw std::invalid_argument("label index exceeds configured classes");
    }
  }

  // Merge order is the caller's; one seeded shuffle before the split.
  std::vector<TweetRecord> shuffled = data;
  Rng shuffle_rng = Rng::substream(cfg.seed, "shuffle");
  shuffle_rng.shuffle(shuffled);

  std::vector<int> labels(shuffled.size());
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    labels[i] = label_index(*shuffled[i].label);
  }
  Rng split_rng = Rng::substream(cfg.seed, "split");
  auto [train_idx, val_idx] = stratified_split(labels, opts.ratio, split_rng);

  std::vector<TweetRecord> train_recs, val_recs;
  train_recs.reserve(train_idx.size());
  val_recs.reserve(val_idx.size());
  for (int i : train_idx) train_recs.push_back(shuffled[i]);
  for (int i : val_idx) val_recs.push_back(shuffled[i]);

  // Vocabulary and feature statistics come from the training split only.
  std::vector<TokenSequence> train_tokens;
  train_tokens.reserve(train_recs.size());
  for (const auto& rec : train_recs) {
    train_tokens.push_back(normalize(rec.text, opts.segment_hashtags));
  }
  const Vocabulary vocab =
      Vocabulary::build(train_tokens, opts.min_freq, opts.max_vocab);
  cfg.vocab_size = vocab.size();

  Mat raw_feats(static_cast<int>(train_recs.size()), cfg.n_feat);
  for (std::size_t r = 0; r < train_recs.size(); ++r) {
    const auto f =
        extract_features(train_recs[r].text, train_tokens[r], res).as_array();
    for (int j = 0; j < cfg.n_feat; ++j) raw_feats(static_cast<int>(r), j) = f[j];
  }

  Rng init_rng = Rng::substream(cfg.seed, "init");
  ModelState state = init_model(cfg, init_rng);
  state.feat_mean = feature_mean(raw_feats);
  state.feat_std = feature_std(raw_feats, state.feat_mean);

  // Inverse-frequency weights over the classes present in the training split;
  // absent classes keep weight 1 (they never occur in the loss).
  Vec weights = Vec::Ones(cfg.n_classes);
  if (opts.use_class_weights) {
    std::vector<long> counts(cfg.n_classes, 0);
    for (const auto& rec : train_recs) ++counts[label_index(*rec.label)];
    std::vector<long> present_counts;
    std::vector<int> present_class;
    for (int c = 0; c < cfg.n_classes; ++c) {
      if (counts[c] > 0) {
        present_counts.push_back(counts[c]);
        present_class.push_back(c);
      }
    }
    const Vec w = class_weights(present_counts);
    for (std::size_t k = 0; k < present_class.size(); ++k) {
      weights(present_class[k]) = w(static_cast<int>(k));
    }
  }

  const PreparedSet train_set = prepare_all(
      shuffled, train_idx, vocab, state, opts.segment_hashtags, res);
  const PreparedSet val_set =
      prepare_all(shuffled, val_idx, vocab, state, opts.segment_hashtags, res);

  AdamState adam = AdamState::create(cfg, opts.adam);
  Rng dropout_rng = Rng::substream(cfg.seed, "dropout");

  TrainHistory history;
  std::vector<double> val_losses;
  double best_val = std::numeric_limits<double>::infinity();
  ModelState best_state = state;
  bool have_best = false;

  const int n_train = static_cast<int>(train_idx.size());
  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<int> order = iota_vec(n_train);
    Rng epoch_rng =
        Rng::substream(cfg.seed, "batches/" + std::to_string(epoch));
    epoch_rng.shuffle(order);

    double loss_sum = 0.0;
    for (int start = 0; start < n_train; start += opts.batch_size) {
      const std::vector<int> rows(
          order.begin() + start,
          order.begin() + std::min(n_train, start + opts.batch_size));
      const Batch batch = slice_batch(train_set, rows, true);

      ForwardCache cache;
      const Mat probs =
          model_forward(batch, state, Mode::kTrain, &dropout_rng, &cache);
      const CeResult ce = weighted_crossentropy(probs, batch.labels, weights);
      const double batch_loss =
          ce.loss + attention_penalty(state.params.attn_w, state.params.attn_b,
                                      cfg.l2_attn_w, cfg.l2_attn_b);
      const ModelParams grads = model_backward(cache, ce.grad_z, state);
      adam_step(state.params, grads, adam);
      apply_bn_update(state, cache);

      loss_sum += batch_loss * static_cast<double>(rows.size());
    }

    TrainHistoryRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / n_train;

    const EvalScore val = val_idx.empty()
                              ? EvalScore{std::numeric_limits<double>::quiet_NaN(),
                                          std::numeric_limits<double>::quiet_NaN(),
                                          {}}
                              : score_set(val_set, state, opts.batch_size);
    row.val_loss = val.loss;
    row.val_acc = val.accuracy;
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    history.push_back(row);
    val_losses.push_back(row.val_loss);
    if (opts.on_epoch) opts.on_epoch(row);

    if (row.val_loss < best_val) {  // NaN never compares lower
      best_val = row.val_loss;
      best_state = state;
      have_best = true;
    }
    if (early_stop(val_losses)) break;
  }

  if (have_best) state = std::move(best_state);

  TrainResult result{{std::move(state), vocab, opts.segment_hashtags},
                     std::move(history),
                     std::move(train_recs),
                     std::move(val_recs)};
  return result;
}

// ---------------------------------------------------------------------------
// Inference.

Prediction predict(const TrainedModel& model, const FeatureResources& res,
                   const std::string& raw_text) {
  std::vector<TweetRecord> one(1);
  one[0].id = "query";
  one[0].dialect = "ES";
  one[0].text = raw_text;
  const Batch batch = make_batch(one, {0}, model.vocab, model.state,
                                 model.segment_hashtags, res, false);
  const Mat probs =
      model_forward(batch, model.state, Mode::kInfer, nullptr, nullptr);
  Prediction pred;
  pred.probs = probs.row(0);
  pred.label = argmax_row(probs, 0);
  return pred;
}

namespace {

std::vector<int> predict_all(const TrainedModel& model,
                             const FeatureResources& res,
                             const std::vector<TweetRecord>& data,
                             std::vector<int>* gold_out) {
  if (data.empty()) throw EmptyDataset("evaluation data is empty");
  for (const auto& rec : data) {
    if (!rec.label) {
      throw std::invalid_argument("unlabeled record '" + rec.id +
                                  "' in evaluation data");
    }
    if (label_index(*rec.label) >= model.state.config.n_classes) {
      throw std::invalid_argument("label index exceeds model classes");
    }
  }
  const PreparedSet set =
      prepare_all(data, iota_vec(static_cast<int>(data.size())), model.vocab,
                  model.state, model.segment_hashtags, res);
  const EvalScore score = score_set(set, model.state, 32);
  if (gold_out) *gold_out = set.labels;
  return score.predictions;
}

}  // namespace

MetricsReport evaluate(const TrainedModel& model, const FeatureResources& res,
                       const std::vector<TweetRecord>& data) {
  std::vector<int> gold;
  const std::vector<int> pred = predict_all(model, res, data, &gold);
  return compute_metrics(gold, pred, model.state.config.n_classes);
}

std::map<std::string, MetricsReport> evaluate_by_dialect(
    const TrainedModel& model, const FeatureResources& res,
    const std::vector<TweetRecord>& data) {
  std::vector<int> gold;
  const std::vector<int> pred = predict_all(model, res, data, &gold);

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    groups[data[i].dialect].push_back(i);
  }

  std::map<std::string, MetricsReport> reports;
  for (const auto& [dialect, rows] : groups) {
    std::vector<int> g, p;
    g.reserve(rows.size());
    p.reserve(rows.size());
    for (auto i : rows) {
      g.push_back(gold[i]);
      p.push_back(pred[i]);
    }
    reports.emplace(dialect,
                    compute_metrics(g, p, model.state.config.n_classes));
  }
  return reports;
}

}  // namespace tweetsent
