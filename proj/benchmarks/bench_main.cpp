#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "tweetsent/model.hpp"
#include "tweetsent/textprep.hpp"
#include "tweetsent/train.hpp"

using namespace tweetsent;

namespace {

const char* kSampleTweet =
    "@usuario mira #TheWallStreet hoy https://t.co/xyz ¡qué día tan "
    "increíble! vamos a ver qué pasa #COVID19Update www.noticias.es";

void NormalizeTweet(benchmark::State& state) {
  const std::string text(kSampleTweet);
  for (auto _ : state) {
    auto tokens = normalize(text, true);
    benchmark::DoNotOptimize(tokens);
  }
}
BENCHMARK(NormalizeTweet);

void SegmentHashtag(benchmark::State& state) {
  for (auto _ : state) {
    auto words = segment_hashtag("#TheWallStreetJournal2024Update");
    benchmark::DoNotOptimize(words);
  }
}
BENCHMARK(SegmentHashtag);

struct ModelFixture {
  ModelConfig cfg;
  ModelState state;
  Batch batch;
  Vec weights;

  explicit ModelFixture(int batch_size, int seq_len) {
    cfg.vocab_size = 5000;
    cfg.seq_len = seq_len;
    cfg.dropout = 0.0;
    cfg.recurrent_dropout = 0.0;
    cfg.seed = 1;
    Rng init(cfg.seed);
    state = init_model(cfg, init);

    Rng rng(2);
    batch.indices.resize(batch_size, seq_len);
    batch.lengths.resize(batch_size);
    for (int r = 0; r < batch_size; ++r) {
      batch.lengths[r] = seq_len;
      for (int t = 0; t < seq_len; ++t) {
        batch.indices(r, t) = 2 + static_cast<int>(rng.below(cfg.vocab_size - 2));
      }
    }
    batch.feats = Mat::Zero(batch_size, cfg.n_feat);
    batch.labels.resize(batch_size);
    for (int r = 0; r < batch_size; ++r) {
      batch.labels[r] = static_cast<int>(rng.below(cfg.n_classes));
    }
    weights = Vec::Ones(cfg.n_classes);
  }
};

void ModelForwardInfer(benchmark::State& state) {
  ModelFixture fx(static_cast<int>(state.range(0)), 50);
  for (auto _ : state) {
    Mat probs = model_forward(fx.batch, fx.state, Mode::kInfer, nullptr, nullptr);
    benchmark::DoNotOptimize(probs);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(ModelForwardInfer)->Arg(1)->Arg(8)->Arg(32);

void ModelTrainStep(benchmark::State& state) {
  ModelFixture fx(static_cast<int>(state.range(0)), 50);
  AdamState adam = AdamState::create(fx.cfg, AdamConfig{});
  Rng drop(3);
  for (auto _ : state) {
    ForwardCache cache;
    const Mat probs =
        model_forward(fx.batch, fx.state, Mode::kTrain, &drop, &cache);
    const auto ce = weighted_crossentropy(probs, fx.batch.labels, fx.weights);
    ModelParams grads = model_backward(cache, ce.grad_z, fx.state);
    adam_step(fx.state.params, grads, adam);
    benchmark::DoNotOptimize(fx.state.params.out_b);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(ModelTrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void AdamStepOnly(benchmark::State& state) {
  ModelFixture fx(1, 10);
  AdamState adam = AdamState::create(fx.cfg, AdamConfig{});
  const ModelParams grads = ModelParams::zeros(fx.cfg);
  for (auto _ : state) {
    adam_step(fx.state.params, grads, adam);
    benchmark::DoNotOptimize(fx.state.params.embedding);
  }
}
BENCHMARK(AdamStepOnly)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
