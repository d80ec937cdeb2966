#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tweetsent/layers.hpp"
#include "tweetsent/lexfeat.hpp"

namespace tweetsent {

struct CacheMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int vocab_size = 0;   // V, fixed once the vocabulary is built
  int seq_len = 50;     // L
  int embed_dim = 128;
  int hidden1 = 128;
  int hidden2 = 64;
  int n_feat = FeatureVector::kDim;
  int n_classes = 4;
  double dropout = 0.4;
  double recurrent_dropout = 0.4;
  double l2_attn_w = 1e-4;
  double l2_attn_b = 1e-4;
  std::uint64_t seed = 1;

  int attn_dim() const { return 2 * hidden2; }

  void validate() const;

  bool same_shape(const ModelConfig& o) const {
    return vocab_size == o.vocab_size && seq_len == o.seq_len &&
           embed_dim == o.embed_dim && hidden1 == o.hidden1 &&
           hidden2 == o.hidden2 && n_feat == o.n_feat &&
           n_classes == o.n_classes;
  }
};

// Every learned tensor of the stack:
// embedding -> batch norm -> BiLSTM(h1, dropout) -> BiLSTM(h2) ->
// additive attention -> [context | features] -> softmax head.
struct ModelParams {
  Mat embedding;            // V x d
  Vec bn_gamma, bn_beta;    // d
  BiLstmParams lstm1;       // d -> h1, both directions
  BiLstmParams lstm2;       // 2*h1 -> h2, both directions
  Mat attn_w;               // D x D with D = 2*h2
  Vec attn_b, attn_u;       // D
  Mat out_w;                // (D + n_feat) x n_classes
  Vec out_b;                // n_classes

  static ModelParams zeros(const ModelConfig& cfg);
};

// Named view used by the optimizer, checkpointing and gradient checks.
// Exactly one of mat/vec is set.
struct NamedTensor {
  std::string name;
  Mat* mat = nullptr;
  Vec* vec = nullptr;

  std::size_t size() const {
    return mat ? static_cast<std::size_t>(mat->size())
               : static_cast<std::size_t>(vec->size());
  }
};

// Fixed, documented order; the checkpoint layout depends on it.
std::vector<NamedTensor> param_tensors(ModelParams& p);

struct ModelState {
  ModelConfig config;
  ModelParams params;
  Vec bn_run_mean, bn_run_var;  // d; running stats, var initialized to 1
  Vec feat_mean, feat_std;      // n_feat; training-split standardization
};

// Glorot-uniform weight matrices (forget-gate biases 1, other biases 0),
// gamma = 1, beta = 0, running variance = 1, identity feature scaling.
ModelState init_model(const ModelConfig& cfg, Rng& rng);

// param_tensors plus the non-learned state arrays.
std::vector<NamedTensor> state_tensors(ModelState& s);

// One forward batch. lengths are clamped to >= 1 on construction so a
// PAD-only row still attends somewhere (the degenerate-input contract).
struct Batch {
  Eigen::MatrixXi indices;    // B x L
  std::vector<int> lengths;   // effective lengths, 1..L
  Mat feats;                  // B x n_feat, standardized
  std::vector<int> labels;    // empty when unlabeled

  int size() const { return static_cast<int>(indices.rows()); }
};

struct ForwardCache {
  ModelConfig config;
  Mode mode = Mode::kInfer;
  Eigen::MatrixXi indices;
  std::vector<int> lengths;
  Mat feats;
  std::vector<Mat> embedded;     // L of B x d
  BnCache bn;                    // stats over the B*L position rows
  std::vector<Mat> bn_out;       // L of B x d
  BiLstmCache lstm1;
  std::vector<Mat> lstm1_out;    // L of B x 2h1
  BiLstmCache lstm2;
  std::vector<Mat> lstm2_out;    // L of B x 2h2
  AttnCache attn;
  Mat context;                   // B x D
  Mat concat;                    // B x (D + n_feat)
  Mat probs;                     // B x n_classes
};

// Returns class probabilities (B x n_classes). Train mode draws dropout
// masks from rng and computes batch-norm statistics from the batch; infer
// mode is deterministic and uses the running statistics. Never mutates the
// state; the trainer folds the cached batch statistics into the running
// stats via apply_bn_update. Throws IndexOutOfRange for indices outside
// [0, V) and DegenerateBatch when B*L < 2 in train mode.
Mat model_forward(const Batch& batch, const ModelState& state, Mode mode,
                  Rng* dropout_rng, ForwardCache* cache);

// run_mean/var <- momentum * old + (1 - momentum) * batch stat.
void apply_bn_update(ModelState& state, const ForwardCache& cache);

// Exact reverse-mode gradients for every parameter, including BPTT through
// both BiLSTMs and the attention L2 terms. Throws CacheMismatch when the
// cache does not match the state's configured shapes.
ModelParams model_backward(const ForwardCache& cache, const Mat& grad_z,
                           const ModelState& state);

// Training objective for one batch: weighted cross-entropy plus the
// attention L2 penalty.
double model_loss(const Mat& probs, const std::vector<int>& gold,
                  const Vec& class_weights, const ModelState& state);

}  // namespace tweetsent
