#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "support/synthetic.hpp"
#include "tweetsent/train.hpp"

using namespace tweetsent;

// ---------------------------------------------------------------------------
// Stratified split.

TEST_CASE("stratified_split applies the per-class ceiling rule") {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) labels.insert(labels.end(), 25, c);
  Rng rng(1);
  const auto [train, val] = stratified_split(labels, 0.7, rng);
  CHECK(train.size() == 72);  // ceil(0.7*25)=18 per class
  CHECK(val.size() == 28);

  std::map<int, int> train_counts;
  for (int i : train) ++train_counts[labels[i]];
  for (int c = 0; c < 4; ++c) CHECK(train_counts[c] == 18);

  // union preserved, no overlap
  std::vector<int> all = train;
  all.insert(all.end(), val.begin(), val.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 100; ++i) CHECK(all[i] == i);
}

TEST_CASE("stratified_split boundary and determinism") {
  std::vector<int> labels = {0, 0, 1, 1, 1};
  {
    Rng rng(9);
    const auto [train, val] = stratified_split(labels, 1.0, rng);
    CHECK(train.size() == 5);
    CHECK(val.empty());
  }
  {
    Rng a(33), b(33);
    const auto sa = stratified_split(labels, 0.7, a);
    const auto sb = stratified_split(labels, 0.7, b);
    CHECK(sa.first == sb.first);
    CHECK(sa.second == sb.second);
  }
}

TEST_CASE("stratified_split rejects classes with fewer than 2 instances") {
  Rng rng(2);
  std::vector<int> labels = {0, 0, 1};
  CHECK_THROWS_AS(stratified_split(labels, 0.7, rng), ClassTooSmall);
}

// ---------------------------------------------------------------------------
// Class weights.

TEST_CASE("class_weights reproduces the corpus counts example") {
  const Vec w = class_weights({1994, 710, 1483, 898});
  CHECK(std::abs(w(0) - 0.6375) < 5e-4);
  CHECK(std::abs(w(1) - 1.7905) < 5e-4);
  CHECK(std::abs(w(2) - 0.8573) < 5e-4);
  CHECK(std::abs(w(3) - 1.4157) < 5e-4);
}

TEST_CASE("class_weights closed forms and errors") {
  const Vec balanced = class_weights({10, 10, 10, 10});
  for (int c = 0; c < 4; ++c) CHECK(balanced(c) == 1.0);

  const Vec two = class_weights({200, 100});
  CHECK(two(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(two(1) == doctest::Approx(1.5).epsilon(1e-12));

  CHECK_THROWS_AS(class_weights({5, 0, 3, 2}), ZeroCount);
}

TEST_CASE("property: frequency-weighted mean of class weights is 1") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(5));
    std::vector<long> counts(k);
    long total = 0;
    for (auto& c : counts) {
      c = 1 + static_cast<long>(rng.below(5000));
      total += c;
    }
    const Vec w = class_weights(counts);
    double mean = 0.0;
    for (int c = 0; c < k; ++c) {
      mean += w(c) * static_cast<double>(counts[c]) / total;
    }
    CHECK(std::abs(mean - 1.0) < 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Adam.

namespace {

ModelConfig unit_config() {
  ModelConfig cfg;
  cfg.vocab_size = 1;
  cfg.seq_len = 1;
  cfg.embed_dim = 1;
  cfg.hidden1 = 1;
  cfg.hidden2 = 1;
  cfg.n_feat = 1;
  cfg.n_classes = 1;
  cfg.dropout = 0.0;
  cfg.recurrent_dropout = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("adam: zero gradient is a no-op on parameters") {
  const ModelConfig cfg = unit_config();
  Rng rng(3);
  ModelState state = init_model(cfg, rng);
  const ModelParams before = state.params;
  AdamState adam = AdamState::create(cfg, AdamConfig{});
  adam_step(state.params, ModelParams::zeros(cfg), adam);
  CHECK(state.params.embedding == before.embedding);
  CHECK(state.params.out_w == before.out_w);
  CHECK(state.params.lstm1.fwd.w_i == before.lstm1.fwd.w_i);
  CHECK(adam.step == 1);
}

TEST_CASE("adam: closed-form first step magnitude") {
  const ModelConfig cfg = unit_config();
  ModelState state;
  state.config = cfg;
  state.params = ModelParams::zeros(cfg);
  ModelParams grads = ModelParams::zeros(cfg);
  grads.out_b(0) = 1.0;

  AdamConfig acfg;  // lr = 0.0005
  AdamState adam = AdamState::create(cfg, acfg);
  adam_step(state.params, grads, adam);
  CHECK(std::abs(std::abs(state.params.out_b(0)) - 0.0005) < 1e-9);
  CHECK(state.params.out_b(0) < 0.0);  // moves against the gradient

  // second step with the same gradient stays within [0.9*lr, lr]
  const double before = state.params.out_b(0);
  adam_step(state.params, grads, adam);
  const double delta = before - state.params.out_b(0);
  CHECK(delta >= 0.9 * acfg.lr);
  CHECK(delta <= acfg.lr);
}

TEST_CASE("adam: lr = 0 keeps parameters bit-identical") {
  const ModelConfig cfg = unit_config();
  Rng rng(5);
  ModelState state = init_model(cfg, rng);
  const ModelParams before = state.params;

  ModelParams grads = ModelParams::zeros(cfg);
  Rng grng(6);
  grads.embedding(0, 0) = grng.uniform(-2, 2);
  grads.out_b(0) = grng.uniform(-2, 2);

  AdamConfig acfg;
  acfg.lr = 0.0;
  AdamState adam = AdamState::create(cfg, acfg);
  adam_step(state.params, grads, adam);

  auto ta = param_tensors(state.params);
  auto tb = param_tensors(const_cast<ModelParams&>(before));
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].mat) {
      CHECK(*ta[i].mat == *tb[i].mat);
    } else {
      CHECK(*ta[i].vec == *tb[i].vec);
    }
  }
  CHECK(adam.step == 1);  // moments still advance
}

TEST_CASE("adam rejects non-finite gradients") {
  const ModelConfig cfg = unit_config();
  Rng rng(8);
  ModelState state = init_model(cfg, rng);
  ModelParams grads = ModelParams::zeros(cfg);
  grads.attn_b(0) = std::numeric_limits<double>::quiet_NaN();
  AdamState adam = AdamState::create(cfg, AdamConfig{});
  CHECK_THROWS_AS(adam_step(state.params, grads, adam), NonfiniteGradient);
}

// ---------------------------------------------------------------------------
// Early stopping.

TEST_CASE("early_stop fires only on two consecutive strict rises") {
  CHECK(early_stop({0.9, 0.8, 0.85, 0.87}) == true);
  CHECK(early_stop({0.9, 0.8, 0.85, 0.84}) == false);
  CHECK(early_stop({0.9}) == false);
  CHECK(early_stop({0.9, 0.95}) == false);         // needs 3 entries
  CHECK(early_stop({0.8, 0.9, 1.0}) == true);
  CHECK(early_stop({0.8, 0.9, 0.9}) == false);     // plateau is not a rise
  CHECK(early_stop({}) == false);
}

// ---------------------------------------------------------------------------
// Metrics.

namespace {

// Independent oracle: explicit confusion matrix, then textbook formulas.
MetricsReport brute_force_metrics(const std::vector<int>& gold,
                                  const std::vector<int>& pred, int k) {
  std::vector<std::vector<long>> confusion(k, std::vector<long>(k, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++confusion[gold[i]][pred[i]];

  MetricsReport rep;
  rep.total = static_cast<long>(gold.size());
  long correct = 0;
  for (int c = 0; c < k; ++c) correct += confusion[c][c];
  rep.accuracy = static_cast<double>(correct) / rep.total;
  rep.per_class.resize(k);
  for (int c = 0; c < k; ++c) {
    long gold_c = 0, pred_c = 0;
    for (int j = 0; j < k; ++j) {
      gold_c += confusion[c][j];
      pred_c += confusion[j][c];
    }
    const long tp = confusion[c][c];
    auto& m = rep.per_class[c];
    m.support = gold_c;
    m.precision = pred_c == 0 ? 0.0 : static_cast<double>(tp) / pred_c;
    m.recall = gold_c == 0 ? 0.0 : static_cast<double>(tp) / gold_c;
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2 * m.precision * m.recall / (m.precision + m.recall);
    rep.macro_precision += m.precision / k;
    rep.macro_recall += m.recall / k;
    rep.macro_f1 += m.f1 / k;
  }
  return rep;
}

}  // namespace

TEST_CASE("metrics: perfect predictions") {
  const auto rep = compute_metrics({0, 1, 2, 3}, {0, 1, 2, 3}, 4);
  CHECK(rep.macro_precision == 1.0);
  CHECK(rep.macro_recall == 1.0);
  CHECK(rep.macro_f1 == 1.0);
  CHECK(rep.accuracy == 1.0);
}

TEST_CASE("metrics: worked 2-class example") {
  // gold [A,A,B,B], pred [A,B,B,B]
  const auto rep = compute_metrics({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
  CHECK(rep.per_class[0].precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.per_class[0].recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.per_class[0].f1 == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(rep.per_class[1].precision == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(rep.per_class[1].recall == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.per_class[1].f1 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(rep.macro_f1 == doctest::Approx(11.0 / 15).epsilon(1e-12));
}

TEST_CASE("metrics: a class absent everywhere scores zero and is flagged") {
  const auto rep = compute_metrics({0, 0, 1}, {0, 1, 1}, 4);
  CHECK(rep.per_class[3].precision == 0.0);
  CHECK(rep.per_class[3].recall == 0.0);
  CHECK(rep.per_class[3].f1 == 0.0);
  CHECK(rep.per_class[3].absent);
  CHECK(!rep.per_class[0].absent);
}

TEST_CASE("metrics: empty input is rejected") {
  CHECK_THROWS_AS(compute_metrics({}, {}, 4), EmptyDataset);
}

TEST_CASE("metrics agree with the brute-force oracle on random pairs") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(200));
    std::vector<int> gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng.below(4));
      pred[i] = static_cast<int>(rng.below(4));
    }
    const auto a = compute_metrics(gold, pred, 4);
    const auto b = brute_force_metrics(gold, pred, 4);
    CHECK(std::abs(a.accuracy - b.accuracy) < 1e-12);
    CHECK(std::abs(a.macro_f1 - b.macro_f1) < 1e-12);
    CHECK(std::abs(a.macro_precision - b.macro_precision) < 1e-12);
    CHECK(std::abs(a.macro_recall - b.macro_recall) < 1e-12);
    for (int c = 0; c < 4; ++c) {
      CHECK(std::abs(a.per_class[c].precision - b.per_class[c].precision) < 1e-12);
      CHECK(std::abs(a.per_class[c].recall - b.per_class[c].recall) < 1e-12);
      CHECK(std::abs(a.per_class[c].f1 - b.per_class[c].f1) < 1e-12);
      CHECK(a.per_class[c].support == b.per_class[c].support);
    }
  }
}

TEST_CASE("property: macro F1 is invariant under consistent relabeling") {
  Rng rng(321);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(100));
    std::vector<int> gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng.below(4));
      pred[i] = static_cast<int>(rng.below(4));
    }
    std::vector<int> perm = {0, 1, 2, 3};
    rng.shuffle(perm);
    std::vector<int> gold_p(n), pred_p(n);
    for (int i = 0; i < n; ++i) {
      gold_p[i] = perm[gold[i]];
      pred_p[i] = perm[pred[i]];
    }
    const auto a = compute_metrics(gold, pred, 4);
    const auto b = compute_metrics(gold_p, pred_p, 4);
    CHECK(std::abs(a.macro_f1 - b.macro_f1) < 1e-12);
    CHECK(std::abs(a.accuracy - b.accuracy) < 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Training pipeline.

namespace {

ModelConfig small_train_config(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.seq_len = 8;
  cfg.embed_dim = 12;
  cfg.hidden1 = 8;
  cfg.hidden2 = 4;
  cfg.n_classes = 4;
  cfg.dropout = 0.0;
  cfg.recurrent_dropout = 0.0;
  cfg.seed = seed;
  return cfg;
}

TrainOptions small_train_options(int epochs) {
  TrainOptions opts;
  opts.max_epochs = epochs;
  opts.batch_size = 16;
  opts.adam.lr = 0.01;
  return opts;
}

}  // namespace

TEST_CASE("train with max_epochs = 0 returns an untrained model") {
  const auto data = synthetic::separable_corpus(4, 9);
  const auto result = train(small_train_config(1), small_train_options(0), data,
                            FeatureResources{});
  CHECK(result.history.empty());
  CHECK(result.model.state.config.vocab_size > 2);
}

TEST_CASE("train is deterministic: identical histories for identical seeds") {
  const auto data = synthetic::separable_corpus(6, 10);
  const auto r1 = train(small_train_config(7), small_train_options(4), data,
                        FeatureResources{});
  const auto r2 = train(small_train_config(7), small_train_options(4), data,
                        FeatureResources{});
  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].train_loss == r2.history[e].train_loss);
    CHECK(r1.history[e].val_loss == r2.history[e].val_loss);
    CHECK(r1.history[e].val_acc == r2.history[e].val_acc);
  }
}

TEST_CASE("train rejects an empty dataset") {
  CHECK_THROWS_AS(train(small_train_config(1), small_train_options(1), {},
                        FeatureResources{}),
                  EmptyDataset);
}

TEST_CASE("train and evaluate reject unlabeled records") {
  auto data = synthetic::separable_corpus(4, 11);
  data[0].label.reset();
  CHECK_THROWS_AS(train(small_train_config(1), small_train_options(1), data,
                        FeatureResources{}),
                  std::invalid_argument);

  const auto ok = synthetic::separable_corpus(4, 12);
  const auto result = train(small_train_config(1), small_train_options(1), ok,
                            FeatureResources{});
  auto eval_data = ok;
  eval_data[2].label.reset();
  CHECK_THROWS_AS(evaluate(result.model, FeatureResources{}, eval_data),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate(result.model, FeatureResources{}, {}), EmptyDataset);
}

TEST_CASE("stratified_split rejects a ratio outside [0, 1]") {
  Rng rng(4);
  const std::vector<int> labels = {0, 0, 1, 1};
  CHECK_THROWS_AS(stratified_split(labels, -0.1, rng), std::invalid_argument);
  CHECK_THROWS_AS(stratified_split(labels, 1.5, rng), std::invalid_argument);
}

TEST_CASE("train learns a separable synthetic corpus") {
  const auto data = synthetic::separable_corpus(16, 21);
  const auto result = train(small_train_config(3), small_train_options(30), data,
                            FeatureResources{});
  const auto report =
      evaluate(result.model, FeatureResources{}, result.train_split);
  CHECK(report.accuracy >= 0.9);
}

TEST_CASE("returned model has the minimum recorded validation loss") {
  const auto data = synthetic::separable_corpus(8, 30);
  const auto result = train(small_train_config(5), small_train_options(6), data,
                            FeatureResources{});
  REQUIRE(!result.history.empty());

  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : result.history) best = std::min(best, row.val_loss);

  // recompute the returned model's validation loss
  std::vector<int> which(result.val_split.size());
  for (std::size_t i = 0; i < which.size(); ++i) which[i] = static_cast<int>(i);
  const Batch vb = make_batch(result.val_split, which, result.model.vocab,
                              result.model.state, result.model.segment_hashtags,
                              FeatureResources{}, true);
  const Mat probs =
      model_forward(vb, result.model.state, Mode::kInfer, nullptr, nullptr);
  double loss = 0.0;
  for (int r = 0; r < probs.rows(); ++r) {
    loss += -std::log(std::max(probs(r, vb.labels[r]), 1e-12));
  }
  loss /= probs.rows();
  CHECK(loss == doctest::Approx(best).epsilon(1e-9));
  for (const auto& row : result.history) CHECK(loss <= row.val_loss + 1e-12);
}

TEST_CASE("history CSV honors the timing switch") {
  TrainHistory hist = {{1, 0.5, 0.6, 0.7, 1.234}, {2, 0.4, 0.5, 0.8, 2.345}};
  std::ostringstream off, on;
  write_history_csv(off, hist, false);
  write_history_csv(on, hist, true);
  CHECK(off.str().find("epoch,train_loss,val_loss,val_acc,seconds") == 0);
  CHECK(off.str().find(",0.000") != std::string::npos);
  CHECK(off.str().find("1.234") == std::string::npos);
  CHECK(on.str().find("1.234") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Prediction.

TEST_CASE("predict on an untrained zero-weight model is uniform, label P") {
  ModelConfig cfg = small_train_config(1);
  cfg.vocab_size = 4;
  TrainedModel model;
  model.state.config = cfg;
  model.state.params = ModelParams::zeros(cfg);
  model.state.bn_run_mean = Vec::Zero(cfg.embed_dim);
  model.state.bn_run_var = Vec::Ones(cfg.embed_dim);
  model.state.feat_mean = Vec::Zero(cfg.n_feat);
  model.state.feat_std = Vec::Ones(cfg.n_feat);
  model.vocab = Vocabulary::build({{"hola", "mundo"}}, 1, 100);
  model.segment_hashtags = true;

  const auto pred = predict(model, FeatureResources{}, "hola mundo");
  CHECK(pred.label == label_index(Label::kP));  // index-0 tie-break
  for (int k = 0; k < 4; ++k) CHECK(pred.probs(k) == 0.25);

  const auto again = predict(model, FeatureResources{}, "hola mundo");
  CHECK(again.label == pred.label);
  CHECK(again.probs == pred.probs);

  // an empty tweet still yields a valid prediction
  const auto empty = predict(model, FeatureResources{}, "");
  CHECK(std::abs(empty.probs.sum() - 1.0) < 1e-12);
}

TEST_CASE("evaluate groups by dialect") {
  const auto data = synthetic::separable_corpus(8, 50);
  const auto result = train(small_train_config(2), small_train_options(8), data,
                            FeatureResources{});
  const auto by_dialect =
      evaluate_by_dialect(result.model, FeatureResources{}, data);
  CHECK(!by_dialect.empty());
  long total = 0;
  for (const auto& [dialect, rep] : by_dialect) total += rep.total;
  CHECK(total == static_cast<long>(data.size()));
}
