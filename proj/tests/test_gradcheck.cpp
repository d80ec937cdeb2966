#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "support/gradcheck.hpp"
#include "tweetsent/layers.hpp"
#include "tweetsent/model.hpp"

using namespace tweetsent;

namespace {

constexpr double kTol = 1e-4;

Mat random_mat(int rows, int cols, Rng& rng, double scale = 0.8) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

Vec random_vec(int n, Rng& rng, double scale = 0.8) {
  return random_mat(n, 1, rng, scale).col(0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Layer-by-layer checks. The loss used for each layer is a fixed random
// projection of its outputs, so every output coordinate influences the loss.

TEST_CASE("gradcheck: batch norm (train statistics)") {
  Rng rng(101);
  const int n = 7, ch = 3;
  Mat x = random_mat(n, ch, rng);
  Vec gamma = random_vec(ch, rng) + Vec::Ones(ch);
  Vec beta = random_vec(ch, rng);
  const Mat proj = random_mat(n, ch, rng);

  auto loss = [&]() {
    Vec rm = Vec::Zero(ch), rv = Vec::Ones(ch);
    const Mat y = batchnorm_train(x, gamma, beta, rm, rv, nullptr);
    return (y.array() * proj.array()).sum();
  };

  // analytic
  Vec rm = Vec::Zero(ch), rv = Vec::Ones(ch);
  BnCache cache;
  batchnorm_train(x, gamma, beta, rm, rv, &cache);
  Vec dgamma = Vec::Zero(ch), dbeta = Vec::Zero(ch);
  const Mat dx = batchnorm_backward(proj, cache, gamma, dgamma, dbeta);

  CHECK(gradcheck::check_tensor(x, dx, loss) < kTol);
  CHECK(gradcheck::check_tensor(gamma, dgamma, loss) < kTol);
  CHECK(gradcheck::check_tensor(beta, dbeta, loss) < kTol);
}

TEST_CASE("gradcheck: 2-unit lstm cell, both output activations") {
  for (OutputAct act : {OutputAct::kSigmoid, OutputAct::kTanh}) {
    Rng rng(act == OutputAct::kSigmoid ? 201 : 202);
    const int d = 3, h = 2, batch = 2;
    auto p = LstmGateParams::zeros(d, h);
    p.w_i = random_mat(d, h, rng); p.w_f = random_mat(d, h, rng);
    p.w_o = random_mat(d, h, rng); p.w_g = random_mat(d, h, rng);
    p.u_i = random_mat(h, h, rng); p.u_f = random_mat(h, h, rng);
    p.u_o = random_mat(h, h, rng); p.u_g = random_mat(h, h, rng);
    p.b_i = random_vec(h, rng); p.b_f = random_vec(h, rng);
    p.b_o = random_vec(h, rng); p.b_g = random_vec(h, rng);

    Mat x = random_mat(batch, d, rng);
    Mat h0 = random_mat(batch, h, rng);
    Mat c0 = random_mat(batch, h, rng);
    const Mat proj_h = random_mat(batch, h, rng);
    const Mat proj_c = random_mat(batch, h, rng);

    auto loss = [&]() {
      Mat ho, co;
      lstm_cell_forward(x, h0, c0, p, act, ho, co, nullptr);
      return (ho.array() * proj_h.array()).sum() +
             (co.array() * proj_c.array()).sum();
    };

    LstmCellCache cache;
    Mat ho, co;
    lstm_cell_forward(x, h0, c0, p, act, ho, co, &cache);
    auto grads = LstmGateParams::zeros(d, h);
    Mat dx, dh0, dc0;
    lstm_cell_backward(cache, p, act, proj_h, proj_c, grads, dx, dh0, dc0);

    CHECK(gradcheck::check_tensor(x, dx, loss) < kTol);
    CHECK(gradcheck::check_tensor(h0, dh0, loss) < kTol);
    CHECK(gradcheck::check_tensor(c0, dc0, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.w_i, grads.w_i, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.w_g, grads.w_g, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.u_f, grads.u_f, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.u_o, grads.u_o, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.b_i, grads.b_i, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.b_f, grads.b_f, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.b_o, grads.b_o, loss) < kTol);
    CHECK(gradcheck::check_tensor(p.b_g, grads.b_g, loss) < kTol);
  }
}

TEST_CASE("gradcheck: bilstm over a padded batch") {
  Rng rng(301);
  const int d = 3, h = 2, batch = 2, len = 4;
  BiLstmParams p = BiLstmParams::glorot(d, h, rng);
  std::vector<Mat> x(len);
  for (auto& m : x) m = random_mat(batch, d, rng);
  const std::vector<int> lengths = {4, 2};

  std::vector<Mat> proj(len);
  for (auto& m : proj) m = random_mat(batch, 2 * h, rng);

  auto loss = [&]() {
    const auto out = bilstm_forward(x, lengths, p, OutputAct::kSigmoid, {},
                                    Mode::kInfer, nullptr, nullptr);
    double s = 0.0;
    for (int t = 0; t < len; ++t) s += (out[t].array() * proj[t].array()).sum();
    return s;
  };

  BiLstmCache cache;
  bilstm_forward(x, lengths, p, OutputAct::kSigmoid, {}, Mode::kInfer, nullptr,
                 &cache);
  auto grads = BiLstmParams::zeros(d, h);
  const auto dx =
      bilstm_backward(proj, lengths, p, OutputAct::kSigmoid, cache, grads);

  for (int t = 0; t < len; ++t) {
    CHECK(gradcheck::check_tensor(x[t], dx[t], loss) < kTol);
  }
  CHECK(gradcheck::check_tensor(p.fwd.w_i, grads.fwd.w_i, loss) < kTol);
  CHECK(gradcheck::check_tensor(p.fwd.u_g, grads.fwd.u_g, loss) < kTol);
  CHECK(gradcheck::check_tensor(p.fwd.b_f, grads.fwd.b_f, loss) < kTol);
  CHECK(gradcheck::check_tensor(p.bwd.w_o, grads.bwd.w_o, loss) < kTol);
  CHECK(gradcheck::check_tensor(p.bwd.u_i, grads.bwd.u_i, loss) < kTol);
  CHECK(gradcheck::check_tensor(p.bwd.b_g, grads.bwd.b_g, loss) < kTol);
}

TEST_CASE("gradcheck: attention including its L2 penalty") {
  Rng rng(401);
  const int dim = 4, batch = 2, len = 3;
  const double l2_w = 1e-2, l2_b = 2e-2;  // large enough to matter
  std::vector<Mat> h(len);
  for (auto& m : h) m = random_mat(batch, dim, rng);
  Mat w = random_mat(dim, dim, rng);
  Vec b = random_vec(dim, rng);
  Vec u = random_vec(dim, rng);
  const std::vector<int> lengths = {3, 2};
  const Mat proj = random_mat(batch, dim, rng);

  auto loss = [&]() {
    const Mat ctx = attention_forward(h, lengths, w, b, u, nullptr);
    return (ctx.array() * proj.array()).sum() +
           attention_penalty(w, b, l2_w, l2_b);
  };

  AttnCache cache;
  attention_forward(h, lengths, w, b, u, &cache);
  Mat dw = Mat::Zero(dim, dim);
  Vec db = Vec::Zero(dim), du = Vec::Zero(dim);
  const auto dh =
      attention_backward(h, lengths, w, b, u, cache, proj, l2_w, l2_b, dw, db, du);

  for (int t = 0; t < len; ++t) {
    CHECK(gradcheck::check_tensor(h[t], dh[t], loss) < kTol);
  }
  CHECK(gradcheck::check_tensor(w, dw, loss) < kTol);
  CHECK(gradcheck::check_tensor(b, db, loss) < kTol);
  CHECK(gradcheck::check_tensor(u, du, loss) < kTol);
}

TEST_CASE("gradcheck: output head with weighted cross-entropy") {
  Rng rng(501);
  const int dim = 3, n_feat = 2, k = 4, batch = 3;
  Mat context = random_mat(batch, dim, rng);
  Mat feats = random_mat(batch, n_feat, rng);
  Mat w_out = random_mat(dim + n_feat, k, rng);
  Vec b_out = random_vec(k, rng);
  const std::vector<int> gold = {2, 0, 3};
  Vec weights(k);
  weights << 0.6, 1.8, 0.9, 1.4;

  auto loss = [&]() {
    const Mat probs = output_head_forward(context, feats, w_out, b_out, nullptr);
    return weighted_crossentropy(probs, gold, weights).loss;
  };

  Mat concat;
  const Mat probs = output_head_forward(context, feats, w_out, b_out, &concat);
  const auto ce = weighted_crossentropy(probs, gold, weights);
  const Mat dw = concat.transpose() * ce.grad_z;
  const Vec db = ce.grad_z.colwise().sum();
  Mat dconcat = ce.grad_z * w_out.transpose();
  Mat dcontext = dconcat.leftCols(dim);
  Mat dfeats = dconcat.rightCols(n_feat);

  CHECK(gradcheck::check_tensor(w_out, dw, loss) < kTol);
  Vec b_copy = b_out;
  CHECK(gradcheck::check_tensor(b_out, db, loss) < kTol);
  CHECK(gradcheck::check_tensor(context, dcontext, loss) < kTol);
  CHECK(gradcheck::check_tensor(feats, dfeats, loss) < kTol);
}

TEST_CASE("gradcheck: embedding rows accumulate only where looked up") {
  Rng rng(601);
  const int v = 5, d = 3;
  Mat emb = random_mat(v, d, rng);
  const std::vector<int> lookups = {1, 3, 1};
  const Mat proj = random_mat(static_cast<int>(lookups.size()), d, rng);

  auto loss = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < lookups.size(); ++i) {
      s += (emb.row(lookups[i]).array() * proj.row(static_cast<int>(i)).array())
               .sum();
    }
    return s;
  };

  Mat demb = Mat::Zero(v, d);
  for (std::size_t i = 0; i < lookups.size(); ++i) {
    demb.row(lookups[i]) += proj.row(static_cast<int>(i));
  }
  CHECK(gradcheck::check_tensor(emb, demb, loss) < kTol);
  CHECK(demb.row(0).cwiseAbs().maxCoeff() == 0.0);  // row 0 never looked up
  CHECK(demb.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(demb.row(4).cwiseAbs().maxCoeff() == 0.0);
}

// ---------------------------------------------------------------------------
// Full composed model at toy dimensions.

TEST_CASE("gradcheck: full model at toy dimensions") {
  ModelConfig cfg;
  cfg.vocab_size = 7;
  cfg.seq_len = 4;
  cfg.embed_dim = 3;
  cfg.hidden1 = 3;
  cfg.hidden2 = 2;
  cfg.n_classes = 4;
  cfg.dropout = 0.0;            // masks off: the loss must be deterministic
  cfg.recurrent_dropout = 0.0;
  cfg.l2_attn_w = 1e-3;
  cfg.l2_attn_b = 2e-3;
  cfg.seed = 77;

  Rng init(cfg.seed);
  ModelState state = init_model(cfg, init);

  Batch batch;
  batch.indices.resize(2, cfg.seq_len);
  batch.indices << 1, 2, 3, 0,
                   4, 5, 6, 2;
  batch.lengths = {3, 4};
  Rng frng(88);
  batch.feats = random_mat(2, cfg.n_feat, frng);
  batch.labels = {2, 0};

  Vec weights(cfg.n_classes);
  weights << 0.6, 1.8, 0.9, 1.4;

  auto loss = [&]() {
    const Mat probs = model_forward(batch, state, Mode::kTrain, nullptr, nullptr);
    return model_loss(probs, batch.labels, weights, state);
  };

  ForwardCache cache;
  const Mat probs = model_forward(batch, state, Mode::kTrain, nullptr, &cache);
  const auto ce = weighted_crossentropy(probs, batch.labels, weights);
  ModelParams grads = model_backward(cache, ce.grad_z, state);

  const auto errors = gradcheck::check_model(state.params, grads, loss);
  for (const auto& e : errors) {
    INFO("parameter ", e.name);
    CHECK(e.error < kTol);
  }

  // rows of the embedding that never appear in the batch get zero gradient
  // (all 7 indices appear above, so drop one and re-check)
  batch.indices(1, 0) = 1;  // index 4 no longer appears
  ForwardCache cache2;
  const Mat probs2 = model_forward(batch, state, Mode::kTrain, nullptr, &cache2);
  const auto ce2 = weighted_crossentropy(probs2, batch.labels, weights);
  const ModelParams grads2 = model_backward(cache2, ce2.grad_z, state);
  CHECK(grads2.embedding.row(4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model_backward: zero upstream gradient and zero penalties") {
  ModelConfig cfg;
  cfg.vocab_size = 5;
  cfg.seq_len = 3;
  cfg.embed_dim = 2;
  cfg.hidden1 = 2;
  cfg.hidden2 = 2;
  cfg.dropout = 0.0;
  cfg.recurrent_dropout = 0.0;
  cfg.l2_attn_w = 0.0;
  cfg.l2_attn_b = 0.0;
  Rng init(5);
  ModelState state = init_model(cfg, init);

  Batch batch;
  batch.indices.resize(1, 3);
  batch.indices << 1, 2, 3;
  batch.lengths = {3};
  batch.feats = Mat::Zero(1, cfg.n_feat);

  ForwardCache cache;
  model_forward(batch, state, Mode::kTrain, nullptr, &cache);
  ModelParams grads =
      model_backward(cache, Mat::Zero(1, cfg.n_classes), state);
  for (const auto& t : param_tensors(grads)) {
    const double norm = t.mat ? t.mat->cwiseAbs().maxCoeff()
                              : t.vec->cwiseAbs().maxCoeff();
    INFO("parameter ", t.name);
    CHECK(norm == 0.0);
  }
}

TEST_CASE("model_backward rejects a mismatched cache") {
  ModelConfig cfg;
  cfg.vocab_size = 5;
  cfg.seq_len = 3;
  cfg.embed_dim = 2;
  cfg.hidden1 = 2;
  cfg.hidden2 = 2;
  cfg.dropout = 0.0;
  cfg.recurrent_dropout = 0.0;
  Rng init(6);
  ModelState state = init_model(cfg, init);

  Batch batch;
  batch.indices.resize(1, 3);
  batch.indices << 1, 2, 3;
  batch.lengths = {3};
  batch.feats = Mat::Zero(1, cfg.n_feat);

  ForwardCache cache;
  model_forward(batch, state, Mode::kTrain, nullptr, &cache);

  ModelConfig other = cfg;
  other.hidden2 = 3;
  Rng init2(7);
  ModelState other_state = init_model(other, init2);
  CHECK_THROWS_AS(
      model_backward(cache, Mat::Zero(1, cfg.n_classes), other_state),
      CacheMismatch);
}
