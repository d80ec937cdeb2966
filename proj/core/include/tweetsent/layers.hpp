#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "tweetsent/rng.hpp"

namespace tweetsent {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Mode { kTrain, kInfer };

// Output activation applied to the cell state: sigmoid for the first
// recurrent layer, tanh for the second.
enum class OutputAct { kSigmoid, kTanh };

struct DegenerateBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllPositionsMasked : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// fan_in x fan_out matrix, i.i.d. uniform on +-sqrt(6/(fan_in+fan_out)).
Mat glorot_uniform(int fan_in, int fan_out, Rng& rng);

// Row lookup into the embedding table: one B x d matrix per time step.
// PAD rows pass through like any other row (masking happens downstream).
// Throws IndexOutOfRange for indices outside [0, rows(table)).
std::vector<Mat> embedding_forward(const Eigen::MatrixXi& indices,
                                   const Mat& table);

// ---------------------------------------------------------------------------
// Batch normalization over rows of an N x C matrix, per-channel statistics.

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.99;

struct BnCache {
  Mat xhat;      // N x C, normalized input
  Vec inv_std;   // C, 1/sqrt(var + eps)
  Vec mean, var; // C, batch statistics (biased variance)
};

// Train mode: per-channel statistics over the N rows; running stats are
// updated in place with momentum kBnMomentum. Throws DegenerateBatch when
// N < 2. Cache is optional.
Mat batchnorm_train(const Mat& x, const Vec& gamma, const Vec& beta,
                    Vec& run_mean, Vec& run_var, BnCache* cache);

// Infer mode: normalizes with the running statistics.
Mat batchnorm_infer(const Mat& x, const Vec& gamma, const Vec& beta,
                    const Vec& run_mean, const Vec& run_var);

// Exact gradient through the batch statistics. Accumulates dgamma/dbeta.
Mat batchnorm_backward(const Mat& dy, const BnCache& cache, const Vec& gamma,
                       Vec& dgamma, Vec& dbeta);

// ---------------------------------------------------------------------------
// LSTM. Gate order throughout: input, forget, output, candidate.

struct LstmGateParams {
  Mat w_i, w_f, w_o, w_g;  // d_in x h
  Mat u_i, u_f, u_o, u_g;  // h x h
  Vec b_i, b_f, b_o, b_g;  // h

  static LstmGateParams zeros(int d_in, int h);
  static LstmGateParams glorot(int d_in, int h, Rng& rng, double forget_bias = 1.0);
};

struct LstmCellCache {
  Mat x, h_prev, c_prev;    // inputs as seen by the cell (post-dropout)
  Mat i, f, o, g, c, act_c; // B x h activations
};

// i,f,o = logistic(Wx + Uh + b); g = tanh(Wx + Uh + b);
// c_t = f.c_prev + i.g; h_t = o.act(c_t).
void lstm_cell_forward(const Mat& x, const Mat& h_prev, const Mat& c_prev,
                       const LstmGateParams& p, OutputAct act, Mat& h_out,
                       Mat& c_out, LstmCellCache* cache);

// Accumulates parameter gradients into `grads`; writes input gradients.
void lstm_cell_backward(const LstmCellCache& cache, const LstmGateParams& p,
                        OutputAct act, const Mat& dh, const Mat& dc,
                        LstmGateParams& grads, Mat& dx, Mat& dh_prev,
                        Mat& dc_prev);

// ---------------------------------------------------------------------------
// Bidirectional LSTM over a right-padded batch.

struct BiLstmParams {
  LstmGateParams fwd, bwd;

  static BiLstmParams zeros(int d_in, int h);
  static BiLstmParams glorot(int d_in, int h, Rng& rng);
};

struct DropoutCfg {
  double input_p = 0.0;      // on the layer input
  double recurrent_p = 0.0;  // on h_{t-1} entering the gates
};

struct LstmDirCache {
  Mat mask_x, mask_h;                // per-sequence dropout masks (B x d, B x h)
  std::vector<LstmCellCache> steps;  // indexed by time step
};

struct BiLstmCache {
  LstmDirCache fwd, bwd;
};

// x: L matrices of B x d_in; lengths: valid length per row (0..L). Outputs
// L matrices of B x 2h with fwd and bwd halves concatenated; padded
// positions produce zero output. In train mode, per-sequence Bernoulli
// dropout masks scaled by 1/(1-p) are drawn from rng.
std::vector<Mat> bilstm_forward(const std::vector<Mat>& x,
                                const std::vector<int>& lengths,
                                const BiLstmParams& p, OutputAct act,
                                const DropoutCfg& drop, Mode mode, Rng* rng,
                                BiLstmCache* cache);

// Full BPTT through both directions. Accumulates into `grads`; returns dx.
std::vector<Mat> bilstm_backward(const std::vector<Mat>& dout,
                                 const std::vector<int>& lengths,
                                 const BiLstmParams& p, OutputAct act,
                                 const BiLstmCache& cache, BiLstmParams& grads);

// ---------------------------------------------------------------------------
// Additive attention: e_t = tanh(h_t W + b) . u, alpha = softmax over
// unmasked positions, context = sum alpha_t h_t. The L2 penalties on W and b
// enter the training loss via attention_penalty and the gradients via
// attention_backward.

struct AttnCache {
  std::vector<Mat> s;  // L matrices of B x D, tanh projections
  Mat alpha;           // B x L, masked positions exactly 0
};

// Throws AllPositionsMasked when any row has length <= 0.
Mat attention_forward(const std::vector<Mat>& h, const std::vector<int>& lengths,
                      const Mat& w, const Vec& b, const Vec& u, AttnCache* cache);

double attention_penalty(const Mat& w, const Vec& b, double l2_w, double l2_b);

std::vector<Mat> attention_backward(const std::vector<Mat>& h,
                                    const std::vector<int>& lengths,
                                    const Mat& w, const Vec& b, const Vec& u,
                                    const AttnCache& cache, const Mat& dcontext,
                                    double l2_w, double l2_b, Mat& dw, Vec& db,
                                    Vec& du);

// ---------------------------------------------------------------------------
// Output head and loss.

// Row-wise softmax with max subtraction; rows sum to 1.
Mat softmax_rows(const Mat& z);

// z = [context | feats] W + b; returns softmax(z). concat_out is optional.
Mat output_head_forward(const Mat& context, const Mat& feats, const Mat& w_out,
                        const Vec& b_out, Mat* concat_out);

struct CeResult {
  double loss = 0.0;
  Mat grad_z;  // gradient with respect to pre-softmax logits
};

// loss = (1/B) sum_b w_{y_b} * (-log probs[b, y_b]); probs are clamped to
// >= 1e-12 before the log. grad_z = w_{y_b} (probs_b - onehot(y_b)) / B.
CeResult weighted_crossentropy(const Mat& probs, const std::vector<int>& gold,
                               const Vec& class_weights);

}  // namespace tweetsent
