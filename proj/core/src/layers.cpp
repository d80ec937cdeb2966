#include "tweetsent/layers.hpp"

#include <cmath>

namespace tweetsent {

Mat glorot_uniform(int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Mat m(fan_in, fan_out);
  // Row-major fill order so the draw sequence matches the documented
  // checkpoint layout.
  for (int r = 0; r < fan_in; ++r) {
    for (int c = 0; c < fan_out; ++c) {
      m(r, c) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

std::vector<Mat> embedding_forward(const Eigen::MatrixXi& indices,
                                   const Mat& table) {
  const int batch = static_cast<int>(indices.rows());
  const int len = static_cast<int>(indices.cols());
  std::vector<Mat> out(len, Mat(batch, table.cols()));
  for (int t = 0; t < len; ++t) {
    for (int b = 0; b < batch; ++b) {
      const int idx = indices(b, t);
      if (idx < 0 || idx >= table.rows()) {
        throw IndexOutOfRange("token index " + std::to_string(idx) +
                              " outside vocabulary of size " +
                              std::to_string(table.rows()));
      }
      out[t].row(b) = table.row(idx);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch normalization.

Mat batchnorm_train(const Mat& x, const Vec& gamma, const Vec& beta,
                    Vec& run_mean, Vec& run_var, BnCache* cache) {
  const auto n = x.rows();
  if (n < 2) {
    throw DegenerateBatch("batch norm needs at least 2 position rows in train mode");
  }
  const Vec mean = x.colwise().mean();
  const Mat centered = x.rowwise() - mean.transpose();
  const Vec var = centered.array().square().colwise().mean();  // biased
  const Vec inv_std = (var.array() + kBnEpsilon).sqrt().inverse();

  Mat xhat = centered.array().rowwise() * inv_std.transpose().array();
  const Mat y = (xhat.array().rowwise() * gamma.transpose().array()).rowwise() +
                beta.transpose().array();

  run_mean = kBnMomentum * run_mean + (1.0 - kBnMomentum) * mean;
  run_var = kBnMomentum * run_var + (1.0 - kBnMomentum) * var;

  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
    cache->mean = mean;
    cache->var = var;
  }
  return y;
}

Mat batchnorm_infer(const Mat& x, const Vec& gamma, const Vec& beta,
                    const Vec& run_mean, const Vec& run_var) {
  const Vec inv_std = (run_var.array() + kBnEpsilon).sqrt().inverse();
  const Vec scale = gamma.array() * inv_std.array();
  const Vec shift = beta.array() - run_mean.array() * scale.array();
  return (x.array().rowwise() * scale.transpose().array()).rowwise() +
         shift.transpose().array();
}

Mat batchnorm_backward(const Mat& dy, const BnCache& cache, const Vec& gamma,
                       Vec& dgamma, Vec& dbeta) {
  const auto n = static_cast<double>(dy.rows());
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();

  const Mat dxhat = dy.array().rowwise() * gamma.transpose().array();
  const Vec sum_dxhat = dxhat.colwise().sum();
  const Vec sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();

  // dx = inv_std/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
  Mat dx = n * dxhat;
  dx.array().rowwise() -= sum_dxhat.transpose().array();
  dx.array() -= cache.xhat.array().rowwise() * sum_dxhat_xhat.transpose().array();
  dx.array().rowwise() *= (cache.inv_std / n).transpose().array();
  return dx;
}

// ---------------------------------------------------------------------------
// LSTM cell.

LstmGateParams LstmGateParams::zeros(int d_in, int h) {
  LstmGateParams p;
  p.w_i = Mat::Zero(d_in, h); p.w_f = Mat::Zero(d_in, h);
  p.w_o = Mat::Zero(d_in, h); p.w_g = Mat::Zero(d_in, h);
  p.u_i = Mat::Zero(h, h); p.u_f = Mat::Zero(h, h);
  p.u_o = Mat::Zero(h, h); p.u_g = Mat::Zero(h, h);
  p.b_i = Vec::Zero(h); p.b_f = Vec::Zero(h);
  p.b_o = Vec::Zero(h); p.b_g = Vec::Zero(h);
  return p;
}

LstmGateParams LstmGateParams::glorot(int d_in, int h, Rng& rng, double forget_bias) {
  LstmGateParams p;
  p.w_i = glorot_uniform(d_in, h, rng);
  p.w_f = glorot_uniform(d_in, h, rng);
  p.w_o = glorot_uniform(d_in, h, rng);
  p.w_g = glorot_uniform(d_in, h, rng);
  p.u_i = glorot_uniform(h, h, rng);
  p.u_f = glorot_uniform(h, h, rng);
  p.u_o = glorot_uniform(h, h, rng);
  p.u_g = glorot_uniform(h, h, rng);
  p.b_i = Vec::Zero(h);
  p.b_f = Vec::Constant(h, forget_bias);
  p.b_o = Vec::Zero(h);
  p.b_g = Vec::Zero(h);
  return p;
}

namespace {

inline Mat logistic(const Mat& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

inline Mat gate_pre(const Mat& x, const Mat& h, const Mat& w, const Mat& u,
                    const Vec& b) {
  return ((x * w + h * u).rowwise() + b.transpose()).eval();
}

}  // namespace

void lstm_cell_forward(const Mat& x, const Mat& h_prev, const Mat& c_prev,
                       const LstmGateParams& p, OutputAct act, Mat& h_out,
                       Mat& c_out, LstmCellCache* cache) {
  const Mat i = logistic(gate_pre(x, h_prev, p.w_i, p.u_i, p.b_i));
  const Mat f = logistic(gate_pre(x, h_prev, p.w_f, p.u_f, p.b_f));
  const Mat o = logistic(gate_pre(x, h_prev, p.w_o, p.u_o, p.b_o));
  const Mat g = gate_pre(x, h_prev, p.w_g, p.u_g, p.b_g).array().tanh();

  c_out = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
  const Mat act_c = act == OutputAct::kSigmoid
                        ? logistic(c_out)
                        : Mat(c_out.array().tanh().matrix());
  h_out = (o.array() * act_c.array()).matrix();

  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = i;
    cache->f = f;
    cache->o = o;
    cache->g = g;
    cache->c = c_out;
    cache->act_c = act_c;
  }
}

void lstm_cell_backward(const LstmCellCache& cc, const LstmGateParams& p,
                        OutputAct act, const Mat& dh, const Mat& dc,
                        LstmGateParams& grads, Mat& dx, Mat& dh_prev,
                        Mat& dc_prev) {
  // h = o * act(c)
  const Mat dact = act == OutputAct::kSigmoid
                       ? Mat((cc.act_c.array() * (1.0 - cc.act_c.array())).matrix())
                       : Mat((1.0 - cc.act_c.array().square()).matrix());
  const Mat do_ = (dh.array() * cc.act_c.array()).matrix();
  const Mat dc_total =
      (dc.array() + dh.array() * cc.o.array() * dact.array()).matrix();

  const Mat di = (dc_total.array() * cc.g.array()).matrix();
  const Mat df = (dc_total.array() * cc.c_prev.array()).matrix();
  const Mat dg = (dc_total.array() * cc.i.array()).matrix();
  dc_prev = (dc_total.array() * cc.f.array()).matrix();

  // pre-activation gradients
  const Mat dpi = (di.array() * cc.i.array() * (1.0 - cc.i.array())).matrix();
  const Mat dpf = (df.array() * cc.f.array() * (1.0 - cc.f.array())).matrix();
  const Mat dpo = (do_.array() * cc.o.array() * (1.0 - cc.o.array())).matrix();
  const Mat dpg = (dg.array() * (1.0 - cc.g.array().square())).matrix();

  grads.w_i += cc.x.transpose() * dpi;
  grads.w_f += cc.x.transpose() * dpf;
  grads.w_o += cc.x.transpose() * dpo;
  grads.w_g += cc.x.transpose() * dpg;
  grads.u_i += cc.h_prev.transpose() * dpi;
  grads.u_f += cc.h_prev.transpose() * dpf;
  grads.u_o += cc.h_prev.transpose() * dpo;
  grads.u_g += cc.h_prev.transpose() * dpg;
  grads.b_i += dpi.colwise().sum();
  grads.b_f += dpf.colwise().sum();
  grads.b_o += dpo.colwise().sum();
  grads.b_g += dpg.colwise().sum();

  dx = dpi * p.w_i.transpose() + dpf * p.w_f.transpose() +
       dpo * p.w_o.transpose() + dpg * p.w_g.transpose();
  dh_prev = dpi * p.u_i.transpose() + dpf * p.u_f.transpose() +
            dpo * p.u_o.transpose() + dpg * p.u_g.transpose();
}

// ---------------------------------------------------------------------------
// Bidirectional LSTM.

BiLstmParams BiLstmParams::zeros(int d_in, int h) {
  return {LstmGateParams::zeros(d_in, h), LstmGateParams::zeros(d_in, h)};
}

BiLstmParams BiLstmParams::glorot(int d_in, int h, Rng& rng) {
  BiLstmParams p;
  p.fwd = LstmGateParams::glorot(d_in, h, rng);
  p.bwd = LstmGateParams::glorot(d_in, h, rng);
  return p;
}

namespace {

// One mask per sequence (variational dropout), scaled by 1/(1-p).
Mat dropout_mask(int rows, int cols, double p, Mode mode, Rng* rng) {
  if (mode != Mode::kTrain || p <= 0.0) return Mat::Ones(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = rng->bernoulli(p) ? 0.0 : scale;
    }
  }
  return m;
}

// Row activity at step t: 1 while t < length, else 0.
Vec step_activity(const std::vector<int>& lengths, int t) {
  Vec a(static_cast<int>(lengths.size()));
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    a(static_cast<int>(b)) = t < lengths[b] ? 1.0 : 0.0;
  }
  return a;
}

// One direction over the time order given by (start, step). Inactive steps
// carry state through unchanged and contribute zero output.
void run_direction(const std::vector<Mat>& x, const std::vector<int>& lengths,
                   const LstmGateParams& p, OutputAct act, int start, int step,
                   LstmDirCache& cache, std::vector<Mat>& out, int out_col) {
  const int len = static_cast<int>(x.size());
  const int batch = static_cast<int>(x[0].rows());
  const int h = static_cast<int>(p.b_i.size());

  Mat h_state = Mat::Zero(batch, h);
  Mat c_state = Mat::Zero(batch, h);
  cache.steps.resize(len);

  for (int k = 0, t = start; k < len; ++k, t += step) {
    const Mat xt = (x[t].array() * cache.mask_x.array()).matrix();
    const Mat hd = (h_state.array() * cache.mask_h.array()).matrix();
    Mat h_raw, c_raw;
    lstm_cell_forward(xt, hd, c_state, p, act, h_raw, c_raw, &cache.steps[t]);

    const Vec active = step_activity(lengths, t);
    h_state = (h_raw.array().colwise() * active.array()) +
              (h_state.array().colwise() * (1.0 - active.array()));
    c_state = (c_raw.array().colwise() * active.array()) +
              (c_state.array().colwise() * (1.0 - active.array()));

    out[t].middleCols(out_col, h) =
        (h_state.array().colwise() * active.array()).matrix();
  }
}

void backward_direction(const std::vector<Mat>& dout,
                        const std::vector<int>& lengths,
                        const LstmGateParams& p, OutputAct act,
                        const LstmDirCache& cache, int start, int step,
                        int out_col, LstmGateParams& grads,
                        std::vector<Mat>& dx) {
  const int len = static_cast<int>(dout.size());
  const int batch = static_cast<int>(dout[0].rows());
  const int h = static_cast<int>(p.b_i.size());

  Mat dh_state = Mat::Zero(batch, h);
  Mat dc_state = Mat::Zero(batch, h);

  // Reverse of the forward visit order.
  for (int k = len - 1, t = start + (len - 1) * step; k >= 0; --k, t -= step) {
    const Vec active = step_activity(lengths, t);
    const Mat dh_total =
        dh_state +
        (dout[t].middleCols(out_col, h).array().colwise() * active.array()).matrix();

    const Mat dh_raw = (dh_total.array().colwise() * active.array()).matrix();
    const Mat dc_raw = (dc_state.array().colwise() * active.array()).matrix();
    const Mat dh_carry =
        (dh_total.array().colwise() * (1.0 - active.array())).matrix();
    const Mat dc_carry =
        (dc_state.array().colwise() * (1.0 - active.array())).matrix();

    Mat dxt, dhd, dc_prev;
    lstm_cell_backward(cache.steps[t], p, act, dh_raw, dc_raw, grads, dxt, dhd,
                       dc_prev);

    dx[t] += (dxt.array() * cache.mask_x.array()).matrix();
    dh_state = (dhd.array() * cache.mask_h.array()).matrix() + dh_carry;
    dc_state = dc_prev + dc_carry;
  }
}

}  // namespace

std::vector<Mat> bilstm_forward(const std::vector<Mat>& x,
                                const std::vector<int>& lengths,
                                const BiLstmParams& p, OutputAct act,
                                const DropoutCfg& drop, Mode mode, Rng* rng,
                                BiLstmCache* cache) {
  const int len = static_cast<int>(x.size());
  const int batch = static_cast<int>(x[0].rows());
  const int d_in = static_cast<int>(x[0].cols());
  const int h = static_cast<int>(p.fwd.b_i.size());

  BiLstmCache local;
  BiLstmCache& c = cache ? *cache : local;
  c.fwd.mask_x = dropout_mask(batch, d_in, drop.input_p, mode, rng);
  c.fwd.mask_h = dropout_mask(batch, h, drop.recurrent_p, mode, rng);
  c.bwd.mask_x = dropout_mask(batch, d_in, drop.input_p, mode, rng);
  c.bwd.mask_h = dropout_mask(batch, h, drop.recurrent_p, mode, rng);

  std::vector<Mat> out(len, Mat::Zero(batch, 2 * h));
  run_direction(x, lengths, p.fwd, act, 0, 1, c.fwd, out, 0);
  run_direction(x, lengths, p.bwd, act, len - 1, -1, c.bwd, out, h);
  return out;
}

std::vector<Mat> bilstm_backward(const std::vector<Mat>& dout,
                                 const std::vector<int>& lengths,
                                 const BiLstmParams& p, OutputAct act,
                                 const BiLstmCache& cache, BiLstmParams& grads) {
  const int len = static_cast<int>(dout.size());
  const int batch = static_cast<int>(dout[0].rows());
  const int h = static_cast<int>(p.fwd.b_i.size());
  const int d_in = static_cast<int>(p.fwd.w_i.rows());

  std::vector<Mat> dx(len, Mat::Zero(batch, d_in));
  backward_direction(dout, lengths, p.fwd, act, cache.fwd, 0, 1, 0, grads.fwd, dx);
  backward_direction(dout, lengths, p.bwd, act, cache.bwd, len - 1, -1, h,
                     grads.bwd, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Attention.

Mat attention_forward(const std::vector<Mat>& h, const std::vector<int>& lengths,
                      const Mat& w, const Vec& b, const Vec& u, AttnCache* cache) {
  const int len = static_cast<int>(h.size());
  const int batch = static_cast<int>(h[0].rows());
  const int dim = static_cast<int>(h[0].cols());

  for (int bi = 0; bi < batch; ++bi) {
    if (lengths[bi] <= 0) {
      throw AllPositionsMasked("attention row " + std::to_string(bi) +
                               " has no unmasked positions");
    }
  }

  AttnCache local;
  AttnCache& c = cache ? *cache : local;
  c.s.resize(len);

  Mat scores(batch, len);
  for (int t = 0; t < len; ++t) {
    c.s[t] = ((h[t] * w).rowwise() + b.transpose()).array().tanh().matrix();
    scores.col(t) = c.s[t] * u;
  }

  // Masked softmax with max subtraction.
  c.alpha = Mat::Zero(batch, len);
  for (int bi = 0; bi < batch; ++bi) {
    const int n = std::min(lengths[bi], len);
    const double m = scores.row(bi).head(n).maxCoeff();
    double z = 0.0;
    for (int t = 0; t < n; ++t) {
      const double e = std::exp(scores(bi, t) - m);
      c.alpha(bi, t) = e;
      z += e;
    }
    c.alpha.row(bi).head(n) /= z;
  }

  Mat context = Mat::Zero(batch, dim);
  for (int t = 0; t < len; ++t) {
    context += (h[t].array().colwise() * c.alpha.col(t).array()).matrix();
  }
  return context;
}

double attention_penalty(const Mat& w, const Vec& b, double l2_w, double l2_b) {
  return l2_w * w.squaredNorm() + l2_b * b.squaredNorm();
}

std::vector<Mat> attention_backward(const std::vector<Mat>& h,
                                    const std::vector<int>& lengths,
                                    const Mat& w, const Vec& b, const Vec& u,
                                    const AttnCache& cache, const Mat& dcontext,
                                    double l2_w, double l2_b, Mat& dw, Vec& db,
                                    Vec& du) {
  const int len = static_cast<int>(h.size());
  const int batch = static_cast<int>(h[0].rows());
  const int dim = static_cast<int>(h[0].cols());
  (void)lengths;

  std::vector<Mat> dh(len, Mat::Zero(batch, dim));

  // context = sum_t alpha_t h_t
  Mat dalpha(batch, len);
  for (int t = 0; t < len; ++t) {
    dalpha.col(t) = (dcontext.array() * h[t].array()).rowwise().sum();
    dh[t] += (dcontext.array().colwise() * cache.alpha.col(t).array()).matrix();
  }

  // Softmax backward; masked entries have alpha = 0 and stay 0.
  const Vec inner = (dalpha.array() * cache.alpha.array()).rowwise().sum();
  const Mat de =
      (cache.alpha.array() * (dalpha.array().colwise() - inner.array())).matrix();

  for (int t = 0; t < len; ++t) {
    // e_t = s_t . u with s_t = tanh(h_t w + b)
    du += cache.s[t].transpose() * de.col(t);
    const Mat ds = de.col(t) * u.transpose();
    const Mat dpre = (ds.array() * (1.0 - cache.s[t].array().square())).matrix();
    dw += h[t].transpose() * dpre;
    db += dpre.colwise().sum();
    dh[t] += dpre * w.transpose();
  }

  dw += 2.0 * l2_w * w;
  db += 2.0 * l2_b * b;
  return dh;
}

// ---------------------------------------------------------------------------
// Output head and loss.

Mat softmax_rows(const Mat& z) {
  Mat out(z.rows(), z.cols());
  for (int r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    out.row(r) = (z.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Mat output_head_forward(const Mat& context, const Mat& feats, const Mat& w_out,
                        const Vec& b_out, Mat* concat_out) {
  Mat concat(context.rows(), context.cols() + feats.cols());
  concat << context, feats;
  const Mat z = (concat * w_out).rowwise() + b_out.transpose();
  if (concat_out) *concat_out = std::move(concat);
  return softmax_rows(z);
}

CeResult weighted_crossentropy(const Mat& probs, const std::vector<int>& gold,
                               const Vec& class_weights) {
  const int batch = static_cast<int>(probs.rows());
  if (static_cast<int>(gold.size()) != batch) {
    throw std::invalid_argument("gold size does not match batch");
  }
  CeResult res;
  res.grad_z = Mat::Zero(probs.rows(), probs.cols());
  double loss = 0.0;
  for (int bi = 0; bi < batch; ++bi) {
    const int y = gold[bi];
    if (y < 0 || y >= probs.cols()) {
      throw std::invalid_argument("gold label out of range");
    }
    const double w = class_weights(y);
    loss += w * -std::log(std::max(probs(bi, y), 1e-12));
    res.grad_z.row(bi) = w * probs.row(bi) / batch;
    res.grad_z(bi, y) -= w / batch;
  }
  res.loss = loss / batch;
  return res;
}

}  // namespace tweetsent
