#include "tweetsent/model.hpp"

#include <cmath>

namespace tweetsent {

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be >= 1");
  };
  positive(vocab_size, "vocab_size");
  positive(seq_len, "seq_len");
  positive(embed_dim, "embed_dim");
  positive(hidden1, "hidden1");
  positive(hidden2, "hidden2");
  positive(n_feat, "n_feat");
  positive(n_classes, "n_classes");
  if (dropout < 0.0 || dropout >= 1.0 || recurrent_dropout < 0.0 ||
      recurrent_dropout >= 1.0) {
    throw std::invalid_argument("dropout rates must lie in [0, 1)");
  }
  if (l2_attn_w < 0.0 || l2_attn_b < 0.0) {
    throw std::invalid_argument("L2 strengths must be non-negative");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  ModelParams p;
  p.embedding = Mat::Zero(cfg.vocab_size, cfg.embed_dim);
  p.bn_gamma = Vec::Zero(cfg.embed_dim);
  p.bn_beta = Vec::Zero(cfg.embed_dim);
  p.lstm1 = BiLstmParams::zeros(cfg.embed_dim, cfg.hidden1);
  p.lstm2 = BiLstmParams::zeros(2 * cfg.hidden1, cfg.hidden2);
  const int d = cfg.attn_dim();
  p.attn_w = Mat::Zero(d, d);
  p.attn_b = Vec::Zero(d);
  p.attn_u = Vec::Zero(d);
  p.out_w = Mat::Zero(d + cfg.n_feat, cfg.n_classes);
  p.out_b = Vec::Zero(cfg.n_classes);
  return p;
}

namespace {

void append_gate_tensors(std::vector<NamedTensor>& out, const std::string& prefix,
                         LstmGateParams& p) {
  out.push_back({prefix + "_w_i", &p.w_i, nullptr});
  out.push_back({prefix + "_w_f", &p.w_f, nullptr});
  out.push_back({prefix + "_w_o", &p.w_o, nullptr});
  out.push_back({prefix + "_w_g", &p.w_g, nullptr});
  out.push_back({prefix + "_u_i", &p.u_i, nullptr});
  out.push_back({prefix + "_u_f", &p.u_f, nullptr});
  out.push_back({prefix + "_u_o", &p.u_o, nullptr});
  out.push_back({prefix + "_u_g", &p.u_g, nullptr});
  out.push_back({prefix + "_b_i", nullptr, &p.b_i});
  out.push_back({prefix + "_b_f", nullptr, &p.b_f});
  out.push_back({prefix + "_b_o", nullptr, &p.b_o});
  out.push_back({prefix + "_b_g", nullptr, &p.b_g});
}

}  // namespace

std::vector<NamedTensor> param_tensors(ModelParams& p) {
  std::vector<NamedTensor> out;
  out.reserve(58);
  out.push_back({"embedding", &p.embedding, nullptr});
  out.push_back({"bn_gamma", nullptr, &p.bn_gamma});
  out.push_back({"bn_beta", nullptr, &p.bn_beta});
  append_gate_tensors(out, "lstm1_fwd", p.lstm1.fwd);
  append_gate_tensors(out, "lstm1_bwd", p.lstm1.bwd);
  append_gate_tensors(out, "lstm2_fwd", p.lstm2.fwd);
  append_gate_tensors(out, "lstm2_bwd", p.lstm2.bwd);
  out.push_back({"attn_w", &p.attn_w, nullptr});
  out.push_back({"attn_b", nullptr, &p.attn_b});
  out.push_back({"attn_u", nullptr, &p.attn_u});
  out.push_back({"out_w", &p.out_w, nullptr});
  out.push_back({"out_b", nullptr, &p.out_b});
  return out;
}

std::vector<NamedTensor> state_tensors(ModelState& s) {
  auto out = param_tensors(s.params);
  out.push_back({"bn_run_mean", nullptr, &s.bn_run_mean});
  out.push_back({"bn_run_var", nullptr, &s.bn_run_var});
  out.push_back({"feat_mean", nullptr, &s.feat_mean});
  out.push_back({"feat_std", nullptr, &s.feat_std});
  return out;
}

ModelState init_model(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelState s;
  s.config = cfg;
  s.params.embedding = glorot_uniform(cfg.vocab_size, cfg.embed_dim, rng);
  s.params.bn_gamma = Vec::Ones(cfg.embed_dim);
  s.params.bn_beta = Vec::Zero(cfg.embed_dim);
  s.params.lstm1 = BiLstmParams::glorot(cfg.embed_dim, cfg.hidden1, rng);
  s.params.lstm2 = BiLstmParams::glorot(2 * cfg.hidden1, cfg.hidden2, rng);
  const int d = cfg.attn_dim();
  s.params.attn_w = glorot_uniform(d, d, rng);
  s.params.attn_b = Vec::Zero(d);
  s.params.attn_u = glorot_uniform(d, 1, rng).col(0);
  s.params.out_w = glorot_uniform(d + cfg.n_feat, cfg.n_classes, rng);
  s.params.out_b = Vec::Zero(cfg.n_classes);
  s.bn_run_mean = Vec::Zero(cfg.embed_dim);
  s.bn_run_var = Vec::Ones(cfg.embed_dim);
  s.feat_mean = Vec::Zero(cfg.n_feat);
  s.feat_std = Vec::Ones(cfg.n_feat);
  return s;
}

Mat model_forward(const Batch& batch, const ModelState& state, Mode mode,
                  Rng* dropout_rng, ForwardCache* cache) {
  const ModelConfig& cfg = state.config;
  const int batch_size = batch.size();
  const int len = cfg.seq_len;
  if (batch.indices.cols() != len) {
    throw std::invalid_argument("batch sequence length does not match config");
  }
  if (static_cast<int>(batch.lengths.size()) != batch_size ||
      batch.feats.rows() != batch_size || batch.feats.cols() != cfg.n_feat) {
    throw std::invalid_argument("inconsistent batch");
  }

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.config = cfg;
  c.mode = mode;
  c.indices = batch.indices;
  c.lengths = batch.lengths;
  c.feats = batch.feats;

  c.embedded = embedding_forward(batch.indices, state.params.embedding);

  // Batch norm over all B*L position rows, per embedding channel. Row order:
  // position t of sequence b sits at t*B + b.
  Mat flat(batch_size * len, cfg.embed_dim);
  for (int t = 0; t < len; ++t) {
    flat.middleRows(t * batch_size, batch_size) = c.embedded[t];
  }
  Mat norm;
  if (mode == Mode::kTrain) {
    // Forward stays const over the state: scratch copies absorb the running-
    // stat update here and apply_bn_update folds the cached batch statistics
    // into the real state.
    Vec run_mean = state.bn_run_mean;
    Vec run_var = state.bn_run_var;
    norm = batchnorm_train(flat, state.params.bn_gamma, state.params.bn_beta,
                           run_mean, run_var, &c.bn);
  } else {
    norm = batchnorm_infer(flat, state.params.bn_gamma, state.params.bn_beta,
                           state.bn_run_mean, state.bn_run_var);
  }
  c.bn_out.assign(len, Mat(batch_size, cfg.embed_dim));
  for (int t = 0; t < len; ++t) {
    c.bn_out[t] = norm.middleRows(t * batch_size, batch_size);
  }

  const DropoutCfg drop1{cfg.dropout, cfg.recurrent_dropout};
  c.lstm1_out = bilstm_forward(c.bn_out, batch.lengths, state.params.lstm1,
                               OutputAct::kSigmoid, drop1, mode, dropout_rng,
                               &c.lstm1);
  c.lstm2_out = bilstm_forward(c.lstm1_out, batch.lengths, state.params.lstm2,
                               OutputAct::kTanh, DropoutCfg{}, mode, dropout_rng,
                               &c.lstm2);

  c.context = attention_forward(c.lstm2_out, batch.lengths, state.params.attn_w,
                                state.params.attn_b, state.params.attn_u,
                                &c.attn);

  c.probs = output_head_forward(c.context, batch.feats, state.params.out_w,
                                state.params.out_b, &c.concat);
  return c.probs;
}

void apply_bn_update(ModelState& state, const ForwardCache& cache) {
  if (cache.mode != Mode::kTrain) return;
  state.bn_run_mean =
      kBnMomentum * state.bn_run_mean + (1.0 - kBnMomentum) * cache.bn.mean;
  state.bn_run_var =
      kBnMomentum * state.bn_run_var + (1.0 - kBnMomentum) * cache.bn.var;
}

ModelParams model_backward(const ForwardCache& cache, const Mat& grad_z,
                           const ModelState& state) {
  const ModelConfig& cfg = state.config;
  if (!cache.config.same_shape(cfg)) {
    throw CacheMismatch("forward cache was built for a different model shape");
  }
  const int batch_size = static_cast<int>(cache.indices.rows());
  const int len = cfg.seq_len;
  if (grad_z.rows() != batch_size || grad_z.cols() != cfg.n_classes) {
    throw CacheMismatch("grad_z shape does not match the cached batch");
  }

  ModelParams g = ModelParams::zeros(cfg);

  // Output head: z = concat * W + b.
  g.out_w = cache.concat.transpose() * grad_z;
  g.out_b = grad_z.colwise().sum();
  const Mat dconcat = grad_z * state.params.out_w.transpose();
  const Mat dcontext = dconcat.leftCols(cfg.attn_dim());

  // Attention (includes the L2 penalty gradients).
  std::vector<Mat> dlstm2 = attention_backward(
      cache.lstm2_out, cache.lengths, state.params.attn_w, state.params.attn_b,
      state.params.attn_u, cache.attn, dcontext, cfg.l2_attn_w, cfg.l2_attn_b,
      g.attn_w, g.attn_b, g.attn_u);

  std::vector<Mat> dlstm1 =
      bilstm_backward(dlstm2, cache.lengths, state.params.lstm2,
                      OutputAct::kTanh, cache.lstm2, g.lstm2);
  std::vector<Mat> dbn =
      bilstm_backward(dlstm1, cache.lengths, state.params.lstm1,
                      OutputAct::kSigmoid, cache.lstm1, g.lstm1);

  if (cache.mode == Mode::kTrain) {
    Mat dflat(batch_size * len, cfg.embed_dim);
    for (int t = 0; t < len; ++t) {
      dflat.middleRows(t * batch_size, batch_size) = dbn[t];
    }
    const Mat dx = batchnorm_backward(dflat, cache.bn, state.params.bn_gamma,
                                      g.bn_gamma, g.bn_beta);
    for (int t = 0; t < len; ++t) {
      const Mat demb = dx.middleRows(t * batch_size, batch_size);
      for (int bi = 0; bi < batch_size; ++bi) {
        g.embedding.row(cache.indices(bi, t)) += demb.row(bi);
      }
    }
  } else {
    // Infer-mode normalization is an affine map per channel.
    const Vec inv_std = (state.bn_run_var.array() + kBnEpsilon).sqrt().inverse();
    const Vec scale = state.params.bn_gamma.array() * inv_std.array();
    for (int t = 0; t < len; ++t) {
      const Mat demb =
          (dbn[t].array().rowwise() * scale.transpose().array()).matrix();
      for (int bi = 0; bi < batch_size; ++bi) {
        g.embedding.row(cache.indices(bi, t)) += demb.row(bi);
      }
      // gamma/beta gradients in infer mode need xhat; inference is not a
      // training path, so they are left at zero.
    }
  }

  return g;
}

double model_loss(const Mat& probs, const std::vector<int>& gold,
                  const Vec& class_weights, const ModelState& state) {
  const CeResult ce = weighted_crossentropy(probs, gold, class_weights);
  return ce.loss + attention_penalty(state.params.attn_w, state.params.attn_b,
                                     state.config.l2_attn_w,
                                     state.config.l2_attn_b);
}

}  // namespace tweetsent
